#include <iostream>

#include <CLI11.hpp>

#include "app/commands.hpp"

int main(int argc, char** argv) {
    using namespace qcoop::app;
    CLI::App app{"qcoop: quantized cooperative control of multi-agent networks"};
    app.require_subcommand(1);

    CommandOptions opts;
    std::uint64_t seed = 0, horizon = 0;
    std::int64_t levels = 0;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* cfg = sub->add_option("--config", opts.config_path, "experiment config (JSON)");
        if (needs_config) cfg->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "seed for initial-condition draws");
        sub->add_option("--horizon", horizon, "number of ticks")->check(CLI::PositiveNumber);
        sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
        sub->add_option("--format", opts.format, "trace format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
        sub->add_flag("--oracle", opts.oracle, "also run the coupled-recursion path and require agreement");
    };

    auto* analyze = app.add_subcommand("analyze", "assumption checks and graph spectrum");
    add_common(analyze, true);
    auto* synthesize = app.add_subcommand("synthesize", "resolve auto fields and size the quantizers");
    add_common(synthesize, true);
    auto* simulate = app.add_subcommand("simulate", "run the closed loop and write traces");
    add_common(simulate, true);
    auto* witness = app.add_subcommand("witness", "build a counterexample for a failed assumption");
    add_common(witness, true);
    witness->add_option("--kind", opts.witness_kind, "witness kind")
        ->required()
        ->check(CLI::IsMember({"undetectable", "unstabilizable", "schur-growth"}));
    auto* reproduce = app.add_subcommand("reproduce-paper", "run the bundled four-agent experiment");
    add_common(reproduce, false);
    reproduce->add_option("--runs", opts.runs, "number of consecutive seeds")->capture_default_str();
    reproduce->add_option("--levels", levels, "override L = L_u")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    auto* active = app.get_subcommands().front();
    if (active->count("--seed")) opts.seed = seed;
    if (active->count("--horizon")) opts.horizon = horizon;
    if (active == reproduce && reproduce->count("--levels")) opts.levels = levels;

    return run_guarded(
        [&]() -> int {
            if (active == analyze) return cmd_analyze(opts, std::cout);
            if (active == synthesize) return cmd_synthesize(opts, std::cout);
            if (active == simulate) return cmd_simulate(opts, std::cout);
            if (active == witness) return cmd_witness(opts, std::cout);
            return cmd_reproduce_paper(opts, std::cout);
        },
        std::cerr);
}
