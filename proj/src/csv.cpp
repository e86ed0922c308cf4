#include "mflq/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mflq {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    return out;
}

void append_matrix_header(std::string& line, const std::string& name, Eigen::Index rows,
                          Eigen::Index cols) {
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            line += "," + name + "_" + std::to_string(i) + std::to_string(j);
}

void append_matrix_row(std::string& line, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) line += "," + format_double(m(i, j));
}

void append_vector_header(std::string& line, const std::string& name, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) line += "," + name + "_" + std::to_string(i);
}

void append_vector_row(std::string& line, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) line += "," + format_double(v(i));
}

} // namespace

std::string format_double(double v) {
    if (v == 0.0) return "0"; // normalize negative zero
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_riccati_csv(const std::string& path, const RiccatiBundle& bundle,
                       const TimeGrid& grid) {
    std::ofstream out = open_out(path);
    const Eigen::Index n = bundle.sigma.rows();
    std::string header = "t";
    append_matrix_header(header, "Sigma", n, n);
    append_matrix_header(header, "K", n, n);
    append_matrix_header(header, "Pi", n, n);
    append_matrix_header(header, "M", n, n);
    out << header << "\n";
    for (int i = 0; i < grid.nodes(); ++i) {
        std::string line = format_double(grid.node(i));
        append_matrix_row(line, bundle.sigma.value(i));
        append_matrix_row(line, bundle.k.value(i));
        append_matrix_row(line, bundle.pi.value(i));
        append_matrix_row(line, bundle.m.value(i));
        out << line << "\n";
    }
}

void write_phi_csv(const std::string& path, const AffineBsdeSolution& sol,
                   const TimeGrid& grid) {
    std::ofstream out = open_out(path);
    const Eigen::Index n = sol.a.rows();
    std::string header = "t";
    append_vector_header(header, "a", n);
    append_vector_header(header, "b", n);
    out << header << "\n";
    for (int i = 0; i < grid.nodes(); ++i) {
        std::string line = format_double(grid.node(i));
        append_vector_row(line, sol.a.value(i));
        append_vector_row(line, sol.b.value(i));
        out << line << "\n";
    }
}

void write_paths_csv(const std::string& path, const Ensemble& ensemble) {
    std::ofstream out = open_out(path);
    const TimeGrid& grid = ensemble.solution->grid;
    const Eigen::Index n = ensemble.solution->params.n;
    const Eigen::Index r = ensemble.solution->params.r;
    std::string header = "agent,t";
    append_vector_header(header, "W", 1);
    append_vector_header(header, "phi", n);
    append_vector_header(header, "zeta", n);
    append_vector_header(header, "phat", n);
    append_vector_header(header, "x", n);
    append_vector_header(header, "z", n);
    append_vector_header(header, "u", r);
    out << header << "\n";
    for (const AgentPath& ap : ensemble.agents) {
        for (int i = 0; i < grid.nodes(); ++i) {
            std::string line = std::to_string(ap.k) + "," + format_double(grid.node(i));
            line += "," + format_double(ap.W(i));
            append_vector_row(line, ap.phi.col(i));
            append_vector_row(line, ap.zeta.col(i));
            append_vector_row(line, ap.phat.col(i));
            append_vector_row(line, ap.x.col(i));
            append_vector_row(line, ap.z.col(i));
            append_vector_row(line, ap.u.col(i));
            out << line << "\n";
        }
    }
}

void write_costs_csv(const std::string& path, const CostReport& costs) {
    std::ofstream out = open_out(path);
    out << "agent,J_k\n";
    for (size_t k = 0; k < costs.agent_costs.size(); ++k)
        out << k << "," << format_double(costs.agent_costs[k]) << "\n";
    out << "J_soc," << format_double(costs.social_cost) << "\n";
}

void write_sweep_csv(const std::string& path, const SweepReport& report) {
    std::ofstream out = open_out(path);
    out << "N,metric_name,value\n";
    for (const SweepEntry& e : report.entries) {
        out << e.population << ",sigma_sup," << format_double(e.sigma_sup) << "\n";
        out << e.population << ",pi_sup," << format_double(e.pi_sup) << "\n";
        out << e.population << ",phi_l2sq," << format_double(e.phi_l2sq) << "\n";
        out << e.population << ",beta_l2sq," << format_double(e.beta_l2sq) << "\n";
        out << e.population << ",zeta_l2sq," << format_double(e.zeta_l2sq) << "\n";
        out << e.population << ",x_l2sq," << format_double(e.x_l2sq) << "\n";
    }
}

} // namespace mflq
