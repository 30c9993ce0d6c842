#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "l1switch/simulate.hpp"
#include "l1switch/types.hpp"

namespace l1switch {

// CSV emission. Numbers are printed with 17 significant digits so every
// double round-trips exactly; consumers may recompute metrics from the trace
// and compare bitwise.

inline void append_number(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    void write(const std::string& path) const {
        std::string body;
        body.reserve(rows.size() * header.size() * 12 + 256);
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i > 0) body += ',';
            body += header[i];
        }
        body += '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i > 0) body += ',';
                append_number(body, row[i]);
            }
            body += '\n';
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("csv: cannot write '" + path + "'");
        out << body;
    }
};

inline std::vector<std::string> trace_csv_header(int n, int m) {
    std::vector<std::string> h{"t", "mode"};
    auto push_block = [&](const std::string& stem, int rows, int cols) {
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                h.push_back(cols == 1 ? stem + std::to_string(i)
                                      : stem + std::to_string(i) + "_" + std::to_string(j));
    };
    push_block("x", n, 1);
    push_block("x_ref", n, 1);
    push_block("x_hat", n, 1);
    push_block("u", m, 1);
    push_block("u_ref", m, 1);
    push_block("theta_hat", n, m);
    push_block("sigma_hat", m, 1);
    push_block("omega_hat", m, m);
    return h;
}

inline void write_trace_csv(const std::string& path, const SimulationResult& res, int n, int m,
                            int stride = 1) {
    std::string body;
    const auto T = static_cast<Eigen::Index>(res.time.size());
    body.reserve(static_cast<std::size_t>(T / stride + 2) * static_cast<std::size_t>(24 * (2 + 2 * n + 2 * m + n * m + m * m)));
    const auto header = trace_csv_header(n, m);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0) body += ',';
        body += header[i];
    }
    body += '\n';
    for (Eigen::Index k = 0; k < T; k += stride) {
        append_number(body, res.time[static_cast<std::size_t>(k)]);
        body += ',';
        body += std::to_string(res.mode[static_cast<std::size_t>(k)]);
        auto push_col = [&](const Matrix& mat) {
            for (Eigen::Index i = 0; i < mat.rows(); ++i) {
                body += ',';
                append_number(body, mat(i, k));
            }
        };
        push_col(res.x);
        push_col(res.x_ref);
        push_col(res.x_hat);
        push_col(res.u);
        push_col(res.u_ref);
        // theta_hat is stored column-major; emit row-major to match the header
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) {
                body += ',';
                append_number(body, res.theta_hat(j * n + i, k));
            }
        push_col(res.sigma_hat);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                body += ',';
                append_number(body, res.omega_hat(j * m + i, k));
            }
        body += '\n';
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("csv: cannot write '" + path + "'");
    out << body;
}

}  // namespace l1switch
