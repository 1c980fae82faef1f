#include "vilab/export.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vilab {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc())
        throw std::runtime_error("format_double failed");
    return std::string(buf, ptr);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
}

namespace {
void coord_columns(std::ostream& os, const Grid& grid, std::size_t v) {
    os << v << "," << format_double(grid.x(v)[0]) << ","
       << format_double(grid.dim() == 2 ? grid.x(v)[1] : 0.0);
}
} // namespace

std::string field_csv(const Grid& grid, const Field& u) {
    std::ostringstream os;
    os << "node_id,x1,x2,u\n";
    for (std::size_t v = 0; v < grid.num_nodes(); ++v) {
        coord_columns(os, grid, v);
        os << "," << format_double(u.values[v]) << "\n";
    }
    return os.str();
}

std::string mixed_solution_csv(const Grid& grid, const MixedSolution& sol) {
    std::vector<double> lam(grid.num_nodes(), 0.0);
    std::vector<char> active(grid.num_nodes(), 0);
    for (std::size_t c = 0; c < sol.constrained_nodes.size(); ++c)
        lam[sol.constrained_nodes[c]] = sol.lambda[c];
    for (int v : sol.active_set) active[v] = 1;

    std::ostringstream os;
    os << "node_id,x1,x2,u,lambda,active\n";
    for (std::size_t v = 0; v < grid.num_nodes(); ++v) {
        coord_columns(os, grid, v);
        os << "," << format_double(sol.u.values[v]) << "," << format_double(lam[v]) << ","
           << int(active[v]) << "\n";
    }
    return os.str();
}

std::string friction_solution_csv(const Grid& grid, const FrictionSpec& fspec,
                                  const FrictionSolution& sol) {
    std::vector<double> p(grid.num_nodes(), 0.0);
    std::vector<double> lam(grid.num_nodes(), 0.0);
    std::vector<int> state(grid.num_nodes(), 0);
    std::vector<char> isfr(grid.num_nodes(), 0);
    for (std::size_t i = 0; i < fspec.friction_nodes.size(); ++i) {
        p[fspec.friction_nodes[i]] = sol.p[i];
        state[fspec.friction_nodes[i]] = sol.state.empty() ? 0 : sol.state[i];
        isfr[fspec.friction_nodes[i]] = 1;
    }
    for (std::size_t i = 0; i < fspec.cone_nodes.size(); ++i)
        lam[fspec.cone_nodes[i]] = sol.lambda[i];

    std::ostringstream os;
    os << "node_id,x1,x2,u,lambda,active,p,state\n";
    for (std::size_t v = 0; v < grid.num_nodes(); ++v) {
        coord_columns(os, grid, v);
        const char* st = !isfr[v] ? "" : state[v] > 0 ? "slip+" : state[v] < 0 ? "slip-" : "stick";
        os << "," << format_double(sol.u.values[v]) << "," << format_double(lam[v]) << ","
           << int(isfr[v] && state[v] == 0) << "," << format_double(p[v]) << "," << st << "\n";
    }
    return os.str();
}

std::string merit_trace_csv(const ConvergenceReport& rep) {
    std::ostringstream os;
    os << "k,value,step\n";
    for (const auto& it : rep.iterations)
        os << it.k << "," << format_double(it.value) << "," << format_double(it.step) << "\n";
    return os.str();
}

} // namespace vilab
