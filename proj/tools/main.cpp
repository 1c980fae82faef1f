#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "vilab/fixtures.hpp"
#include "vilab/runner.hpp"
#include "vilab/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"vilab: elliptic variational inequalities, Tresca friction, and "
                 "multiobjective-control equilibria on structured grids"};
    app.set_version_flag("--version", vilab::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    bool dump_mesh = false, dump_matrix = false;

    CLI::App* solve = app.add_subcommand("solve", "run a problem described by a config file");
    solve->add_option("config", config_path, "path to the JSON config")->required();
    solve->add_option("--output", output_dir, "override the output directory");
    solve->add_flag("--dump-mesh", dump_mesh, "write mesh.json (nodes, labels)");
    solve->add_flag("--dump-matrix", dump_matrix, "write matrix.mtx (Matrix Market)");

    CLI::App* fixtures = app.add_subcommand("fixtures", "analytic benchmark studies");
    CLI::App* fx_list = fixtures->add_subcommand("list", "list registered fixtures");
    std::string fixture_name;
    std::string fx_output;
    CLI::App* fx_run = fixtures->add_subcommand("run", "run one fixture study");
    fx_run->add_option("name", fixture_name, "fixture name")->required();
    fx_run->add_option("--output", fx_output, "directory for the study CSV");
    fixtures->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed()) {
        vilab::RunOptions opts;
        if (!output_dir.empty()) opts.output_dir_override = output_dir;
        opts.dump_mesh = dump_mesh;
        opts.dump_matrix = dump_matrix;
        return vilab::run_config_file(config_path, opts);
    }
    if (fx_list->parsed()) {
        for (const auto& c : vilab::fixture_registry())
            std::cout << c.name << "  -  " << c.description << "\n";
        return 0;
    }
    if (fx_run->parsed()) {
        vilab::RunOptions opts;
        if (!fx_output.empty()) opts.output_dir_override = fx_output;
        try {
            return vilab::run_fixture(fixture_name, opts);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return vilab::kExitConfigError;
        }
    }
    return 0;
}
