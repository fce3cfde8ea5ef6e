// splitlab: run, bound, compare and sweep SL / FL / Minibatch SGD experiments.
//
//   splitlab run --config exp.ini [--out DIR] [--seeds 0-19] [--parallel 4] [--format csv|json]
//   splitlab bounds --config exp.ini
//   splitlab compare --config exp.ini
//   splitlab sweep --config exp.ini
//   splitlab partition --labels labels.txt --mechanism dirichlet --clients 10 --alpha 0.5 --seed 3
//
// Exit status: 0 success (an all-diverged sweep is a result), 1 usage or
// config error, 2 runtime failure. SPLITLAB_OUT sets the default output dir.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "splitlab/harness/commands.hpp"
#include "splitlab/harness/io.hpp"

namespace h = splitlab::harness;

namespace {

struct SharedFlags {
    std::string config;
    std::string out;
    std::string seeds;
    int parallel = 0;
    std::string format;
};

void add_shared(CLI::App* cmd, SharedFlags& f, bool needs_config) {
    auto* c = cmd->add_option("--config", f.config, "experiment spec (key = value sections, or JSON)");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "output directory (default: [output] dir, $SPLITLAB_OUT, ./results)");
    cmd->add_option("--seeds", f.seeds, "seed list, e.g. 0,1,2 or 0-19");
    cmd->add_option("--parallel", f.parallel, "concurrent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--format", f.format, "result file format")->check(CLI::IsMember({"csv", "json"}));
}

h::CommandOptions to_options(const SharedFlags& f) {
    h::CommandOptions o;
    o.out_dir = f.out;
    if (!f.seeds.empty()) o.seeds = h::parse_seed_list(f.seeds);
    if (f.parallel > 0) o.parallel = f.parallel;
    if (!f.format.empty()) o.format = f.format;
    return o;
}

void report(const h::CommandResult& r) {
    for (const auto& f : r.files) std::cout << r.out_dir << "/" << f << "\n";
    std::cout << r.manifest << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"split learning / federated averaging lab"};
    app.set_version_flag("--version", SPLITLAB_VERSION);
    app.require_subcommand(1);

    SharedFlags flags;
    auto* run = app.add_subcommand("run", "train, one trace file per (config, seed)");
    auto* bounds = app.add_subcommand("bounds", "evaluate convergence bounds and step-size limits");
    auto* compare = app.add_subcommand("compare", "FL vs SL table: best metric (lr) and threshold lr");
    auto* sweep = app.add_subcommand("sweep", "learning-rate sweep per (algorithm, distribution)");
    for (auto* c : {run, bounds, compare, sweep}) add_shared(c, flags, true);

    h::PartitionRequest preq;
    auto* part = app.add_subcommand("partition", "partition a labels file across clients");
    part->add_option("--labels", preq.labels_path, "one integer label per line")->required()->check(CLI::ExistingFile);
    part->add_option("--mechanism", preq.mechanism)->check(CLI::IsMember({"dirichlet", "classes", "iid"}));
    part->add_option("--clients", preq.clients)->check(CLI::PositiveNumber);
    part->add_option("--alpha", preq.alpha)->check(CLI::PositiveNumber);
    part->add_option("--classes-per-client", preq.classes_per_client)->check(CLI::PositiveNumber);
    part->add_option("--seed", preq.seed);
    part->add_option("--out", flags.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const h::CommandOptions options = to_options(flags);
        if (part->parsed()) {
            report(h::cmd_partition(preq, options));
            return 0;
        }
        const h::ExperimentSpec spec = h::load_spec(flags.config);
        if (run->parsed()) report(h::cmd_run(spec, options));
        if (bounds->parsed()) report(h::cmd_bounds(spec, options));
        if (compare->parsed()) report(h::cmd_compare(spec, options));
        if (sweep->parsed()) report(h::cmd_sweep(spec, options));
        return 0;
    } catch (const splitlab::UsageError& e) {
        std::cerr << "splitlab: " << e.what() << "\n";
        return 1;
    } catch (const splitlab::InfeasibleError& e) {
        std::cerr << "splitlab: infeasible: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "splitlab: " << e.what() << "\n";
        return 2;
    }
}
