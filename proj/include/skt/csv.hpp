#pragma once

// Trajectory CSV. One row per node per time slice:
//
//   t,x[,y],u0,...,u{m-1}
//
// preceded by optional `# key=value` comment lines. Values are written with
// 17 significant digits; a write/read cycle is lossless.

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "report.hpp"

namespace skt {

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr,
                                 const std::vector<std::pair<std::string, std::string>>& meta = {})
{
    const Domain& d = tr.domain;
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
    os << "# domain=" << d.describe() << '\n';
    os << "t,x";
    if (d.dim() == 2) os << ",y";
    for (int c = 0; c < tr.m; ++c) os << ",u" << c;
    os << '\n';
    for (int k = 0; k <= tr.steps(); ++k) {
        const Field& f = tr.slices[static_cast<std::size_t>(k)];
        const std::string t = format_double(tr.time(k));
        for (int n = 0; n < d.size(); ++n) {
            const Point x = d.coord(n);
            os << t << ',' << format_double(x[0]);
            if (d.dim() == 2) os << ',' << format_double(x[1]);
            for (int c = 0; c < tr.m; ++c) os << ',' << format_double(f(n, c));
            os << '\n';
        }
    }
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& tr,
                                 const std::vector<std::pair<std::string, std::string>>& meta = {})
{
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_trajectory_csv(os, tr, meta);
}

/// Reads a trajectory written by write_trajectory_csv. The grid is rebuilt
/// from the coordinate columns, which must enumerate a full tensor grid in
/// x-fastest order starting at the origin.
inline Trajectory read_trajectory_csv(std::istream& is)
{
    std::string line;
    std::vector<std::string> header;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
        break;
    }
    if (header.size() < 3 || header[0] != "t" || header[1] != "x")
        throw std::runtime_error("trajectory csv: missing t,x header");
    const int dim = header[2] == "y" ? 2 : 1;
    const int m = static_cast<int>(header.size()) - 1 - dim;
    if (m < 1) throw std::runtime_error("trajectory csv: no value columns");

    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() != header.size()) throw std::runtime_error("trajectory csv: ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("trajectory csv: no data rows");

    const double t0 = rows[0][0];
    std::size_t per_slice = 0;
    while (per_slice < rows.size() && rows[per_slice][0] == t0) ++per_slice;
    if (rows.size() % per_slice != 0) throw std::runtime_error("trajectory csv: incomplete slice");

    int nx = 0;
    while (nx < static_cast<int>(per_slice) && rows[static_cast<std::size_t>(nx)][dim == 2 ? 2 : 1] == rows[0][dim == 2 ? 2 : 1] &&
           (nx == 0 || rows[static_cast<std::size_t>(nx)][1] > rows[static_cast<std::size_t>(nx) - 1][1]))
        ++nx;
    if (dim == 1) nx = static_cast<int>(per_slice);
    const int ny = dim == 2 ? static_cast<int>(per_slice) / nx : 1;
    const double lx = rows[per_slice - 1][1];
    Domain d = dim == 1 ? Domain::line(lx, nx) : Domain::box(lx, rows[per_slice - 1][2], nx, ny);

    const std::size_t K1 = rows.size() / per_slice;
    const double dt = K1 > 1 ? rows[per_slice][0] - t0 : 1.0;
    Trajectory tr = make_trajectory(d, m, t0, dt);
    for (std::size_t k = 0; k < K1; ++k) {
        Field f(d, m);
        for (int n = 0; n < d.size(); ++n) {
            const auto& row = rows[k * per_slice + static_cast<std::size_t>(n)];
            for (int c = 0; c < m; ++c) f(n, c) = row[static_cast<std::size_t>(1 + dim + c)];
        }
        tr.slices.push_back(std::move(f));
    }
    return tr;
}

inline Trajectory read_trajectory_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_trajectory_csv(is);
}

} // namespace skt
