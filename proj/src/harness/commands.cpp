#include "splitlab/harness/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "splitlab/dataset.hpp"
#include "splitlab/harness/io.hpp"
#include "splitlab/metrics.hpp"
#include "splitlab/parallel.hpp"
#include "splitlab/partition.hpp"
#include "splitlab/theory.hpp"

namespace splitlab::harness {

namespace {

using nlohmann::json;

std::string short_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<std::optional<double>> distribution_list(const ExperimentSpec& spec) {
    if (spec.sweep.distributions.empty()) return {std::nullopt};
    return {spec.sweep.distributions.begin(), spec.sweep.distributions.end()};
}

std::string file_stem(const std::string& prefix, std::optional<Algorithm> alg, const std::string& label) {
    std::string s = prefix;
    if (alg) s += "_" + std::string(to_string(*alg));
    if (!label.empty()) s += "_" + label;
    return s;
}

std::shared_ptr<const Dataset> head_rows(const Dataset& all, std::size_t lo, std::size_t n) {
    auto d = std::make_shared<Dataset>();
    d->classes = all.classes;
    d->features = all.features.middleRows(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(n));
    d->labels.assign(all.labels.begin() + static_cast<std::ptrdiff_t>(lo),
                     all.labels.begin() + static_cast<std::ptrdiff_t>(lo + n));
    return d;
}

Partition make_partition(const ObjectiveSpec& o, const std::vector<int>& labels, std::optional<double> dist,
                         std::string* label) {
    const std::uint64_t seed = derive_seed(o.seed, 1);
    if (o.partition == "dirichlet") {
        const double alpha = dist ? *dist : o.alpha;
        if (dist) *label = "alpha" + short_real(alpha);
        if (!(alpha > 0.0)) throw UsageError("alpha must be > 0");
        return partition_dirichlet(labels, o.clients, alpha, seed);
    }
    if (o.partition == "classes") {
        const double c = dist ? *dist : static_cast<double>(o.classes_per_client);
        if (c < 1.0 || c != std::floor(c)) throw UsageError("classes_per_client must be a positive integer");
        if (dist) *label = "C" + short_real(c);
        return partition_classes(labels, o.clients, static_cast<std::size_t>(c), seed);
    }
    if (dist) throw UsageError("the iid partition has no heterogeneity knob; drop [sweep] distributions");
    return partition_iid(labels, o.clients, seed);
}

json report_json(const BoundReport& r) {
    return {{"t1_init", json_real(r.t1_init)},         {"t2_drift", json_real(r.t2_drift)},
            {"t3_variance", json_real(r.t3_variance)}, {"total", json_real(r.total)},
            {"lr_ok", r.lr_ok},                        {"lr_max", json_real(r.lr_max)}};
}

std::size_t uniform_local_steps(const TrainConfig& train, const Objective* objective) {
    if (!train.local_epochs) return train.local_steps;
    if (!objective) throw UsageError("local_epochs needs an objective with samples to fix K");
    const std::size_t k0 = local_steps_for(train, *objective, 0);
    for (std::size_t i = 1; i < objective->num_clients(); ++i) {
        const std::size_t ki = local_steps_for(train, *objective, i);
        if (ki != k0) {
            throw UsageError("local_epochs gives client 0 K = " + std::to_string(k0) + " but client " +
                             std::to_string(i) + " K = " + std::to_string(ki) +
                             "; the bounds hold for a uniform K across clients, set train.local_steps instead");
        }
    }
    return k0;
}

SweepResult sweep_one(const ExperimentSpec& spec, const BuiltObjective& built, Algorithm alg,
                      const std::vector<double>& grid) {
    TrainConfig c = spec.train;
    c.algorithm = alg;
    const auto seeds = spec.run_seeds();
    return lr_sweep(*built.objective, c, grid, seeds, spec.output.parallel);
}

std::string label_or_all(const std::string& label) { return label.empty() ? "as_configured" : label; }

}  // namespace

std::string resolve_out_dir(const ExperimentSpec& spec, const CommandOptions& options) {
    if (!options.out_dir.empty()) return options.out_dir;
    if (!spec.output.dir.empty()) return spec.output.dir;
    if (const char* env = std::getenv("SPLITLAB_OUT"); env && *env) return env;
    return "results";
}

ExperimentSpec apply_options(ExperimentSpec spec, const CommandOptions& options) {
    if (options.seeds) spec.seeds = *options.seeds;
    if (options.parallel) {
        if (*options.parallel < 1) throw UsageError("--parallel must be >= 1");
        spec.output.parallel = *options.parallel;
    }
    if (options.format) {
        if (*options.format != "csv" && *options.format != "json") throw UsageError("--format must be csv or json");
        spec.output.format = *options.format;
    }
    spec.train.n_clients = spec.objective.clients;
    return spec;
}

BuiltObjective build_objective(const ObjectiveSpec& o, std::size_t batch_size, std::optional<double> distribution) {
    BuiltObjective b;
    if (o.family == "quadratic") {
        QuadraticRecipe r;
        r.clients = o.clients;
        r.dim = o.dim;
        r.smoothness = o.smoothness;
        r.min_curvature = o.min_curvature;
        r.heterogeneity = distribution ? *distribution : o.heterogeneity;
        r.sigma = o.sigma;
        r.init_offset = o.init_offset;
        r.seed = o.seed;
        auto family = std::make_shared<QuadraticFamily>(make_quadratic_family(r));
        b.constants = analytic_constants(*family);
        b.f_star = family->optimum_value();
        b.objective = family;
        if (distribution) b.label = "G" + short_real(*distribution);
        return b;
    }
    if (o.family == "spectral") {
        if (distribution) throw UsageError("the spectral family is IID; drop [sweep] distributions");
        SpectralRecipe r;
        r.clients = o.clients;
        r.dim = o.dim;
        r.smoothness = o.smoothness;
        r.min_curvature = o.min_curvature;
        r.sigma = o.sigma;
        r.init_scale = o.init_scale;
        auto family = std::make_shared<QuadraticFamily>(make_spectral_family(r));
        b.constants = analytic_constants(*family);
        b.f_star = family->optimum_value();
        b.objective = family;
        return b;
    }
    if (o.family == "logistic" || o.family == "mlp") {
        if (o.family == "logistic" && o.classes != 2) throw UsageError("the logistic family needs classes = 2");
        BlobRecipe r;
        r.samples = o.samples + o.test_samples;
        r.features = o.features;
        r.classes = o.classes;
        r.separation = o.separation;
        r.seed = o.seed;
        Dataset all = make_blobs(r);
        if (o.family == "logistic") {
            // bias column
            all.features.conservativeResize(Eigen::NoChange, all.features.cols() + 1);
            all.features.col(all.features.cols() - 1).setOnes();
        }
        auto train = head_rows(all, 0, o.samples);
        auto test = o.test_samples ? head_rows(all, o.samples, o.test_samples) : nullptr;
        Partition p = make_partition(o, train->labels, distribution, &b.label);
        if (o.family == "logistic") {
            b.objective = std::make_shared<LogisticFamily>(train, std::move(p), o.regularization, batch_size, test);
        } else {
            MlpShape shape{o.features, o.cut_width, static_cast<std::size_t>(o.classes), Activation::tanh};
            b.objective = std::make_shared<MlpObjective>(train, std::move(p), shape, batch_size, derive_seed(o.seed, 2), test);
        }
        return b;
    }
    throw UsageError("objective family '" + o.family + "' has no runnable objective (constants is for bounds only)");
}

CommandResult cmd_run(const ExperimentSpec& input, const CommandOptions& options) {
    require_fields(input, {"objective.family", "train.algorithm", "train.lr", "train.rounds"});
    const ExperimentSpec spec = apply_options(input, options);
    const std::string hash = config_hash(spec);
    OutputDir out(resolve_out_dir(spec, options), hash);
    const auto seeds = spec.run_seeds();
    const bool as_json = spec.output.format == "json";

    for (const auto& dist : distribution_list(spec)) {
        const BuiltObjective built = build_objective(spec.objective, spec.train.batch_size, dist);
        const auto traces = run_ensemble(*built.objective, spec.train, seeds, spec.output.parallel);
        for (const auto& t : traces) {
            const std::string stem =
                file_stem("trace", spec.train.algorithm, built.label) + "_seed" + std::to_string(t.seed);
            const auto acc = built.objective->accuracy(t.final_iterate);
            const std::string diverged_at = t.diverged_at ? std::to_string(*t.diverged_at) : "none";
            if (as_json) {
                json records = json::array();
                for (const auto& r : t.records) {
                    records.push_back({{"round", r.round}, {"loss", json_real(r.loss)},
                                       {"grad_norm_sq", json_real(r.grad_norm_sq)}, {"drift", json_real(r.drift)},
                                       {"diverged", r.diverged}, {"grad_evals", r.grad_evals}});
                }
                json body = {{"config_hash", hash},
                             {"algorithm", std::string(to_string(t.algorithm))},
                             {"seed", t.seed},
                             {"distribution", label_or_all(built.label)},
                             {"initial_loss", json_real(t.initial_loss)},
                             {"final_loss", json_real(t.final_loss)},
                             {"averaged_grad_norm_sq", json_real(t.averaged_grad_norm_sq)},
                             {"diverged_at", t.diverged_at ? json(*t.diverged_at) : json(nullptr)},
                             {"records", records}};
                if (acc) body["accuracy"] = *acc;
                out.write_json(stem + ".json", body);
                continue;
            }
            CsvTable csv(hash, {"round", "loss", "grad_norm_sq", "drift", "diverged", "grad_evals"});
            csv.meta("algorithm", std::string(to_string(t.algorithm)));
            csv.meta("seed", std::to_string(t.seed));
            csv.meta("distribution", label_or_all(built.label));
            csv.meta("initial_loss", format_real(t.initial_loss));
            csv.meta("final_loss", format_real(t.final_loss));
            csv.meta("averaged_grad_norm_sq", format_real(t.averaged_grad_norm_sq));
            csv.meta("diverged_at", diverged_at);
            if (acc) csv.meta("accuracy", format_real(*acc));
            for (const auto& r : t.records) {
                csv.add_row({CsvTable::cell(r.round), CsvTable::cell(r.loss), CsvTable::cell(r.grad_norm_sq),
                             CsvTable::cell(r.drift), CsvTable::cell(r.diverged), CsvTable::cell(r.grad_evals)});
            }
            out.write(stem + ".csv", csv.render());
        }
    }
    CommandResult result{out.path(), out.files(), ""};
    result.manifest = out.write_manifest("run", to_json(spec));
    return result;
}

CommandResult cmd_bounds(const ExperimentSpec& input, const CommandOptions& options) {
    require_fields(input, {"objective.family", "train.lr", "train.rounds"});
    const ExperimentSpec spec = apply_options(input, options);
    const std::string hash = config_hash(spec);
    OutputDir out(resolve_out_dir(spec, options), hash);
    const auto& o = spec.objective;
    const auto& t = spec.train;
    if (t.participants() != t.n_clients) {
        throw UsageError("bounds assume full participation; drop train.clients_per_round or set it to " +
                         std::to_string(t.n_clients));
    }

    for (const auto& dist : distribution_list(spec)) {
        HeterogeneityConstants c;
        std::string source;
        std::optional<double> gap = o.F;
        std::size_t k = 0;
        std::string label;
        if (o.family == "constants") {
            require_fields(spec, {"objective.F"});
            c = {o.smoothness, o.sigma * o.sigma, o.B, dist ? *dist : o.heterogeneity};
            source = "given";
            k = uniform_local_steps(t, nullptr);
            if (dist) label = "G" + short_real(*dist);
        } else {
            const BuiltObjective built = build_objective(o, t.batch_size, dist);
            label = built.label;
            k = uniform_local_steps(t, built.objective.get());
            const ParamVec x0 = built.objective->initial_point();
            if (built.constants) {
                c = *built.constants;
                source = "analytic";
            } else {
                auto probes = uniform_probes(built.objective->dim(), spec.sweep.probes, -1.0, 1.0, derive_seed(o.seed, 3));
                for (auto& p : probes) p += x0;
                c = estimate_constants(*built.objective, probes, 20, derive_seed(o.seed, 4));
                source = "estimated";
            }
            // Losses of the dataset families are >= 0, so f(x0) bounds the gap when f* is unknown.
            if (!gap) gap = global_loss(*built.objective, x0) - built.f_star.value_or(0.0);
        }

        BoundInputs in;
        in.constants = c;
        in.N = t.participants();
        in.K = k;
        in.R = t.rounds;
        in.eta = t.lr;
        in.eta_g = t.global_lr;
        in.F = std::max(0.0, *gap);
        if (!(in.eta > 0.0)) throw UsageError("train.lr must be > 0 for bounds");
        if (!(in.eta_g > 0.0)) throw UsageError("train.global_lr must be > 0 for bounds");

        BoundInputs sl_in = in;
        sl_in.eta_g = 1.0;
        const BoundReport sl = sl_bound(sl_in);
        const BoundReport fl = fl_bound(in);
        const double lr_sl = max_lr_sl(c, in.N, in.K);
        const double lr_fl = max_lr_fl(c, in.K, in.eta_g);
        const double lr_one = max_lr_one_client(c, in.K);
        json drift = nullptr;
        try {
            drift = drift_bound(c, in.N, in.K, in.eta, 0.0);
        } catch (const ConstraintError&) {
        }

        json report = {
            {"config_hash", hash},
            {"distribution", label_or_all(label)},
            {"constants", {{"L", c.L}, {"sigma2", c.sigma2}, {"B", c.B}, {"G", c.G}, {"source", source}}},
            {"inputs", {{"N", in.N}, {"K", in.K}, {"R", in.R}, {"eta", in.eta}, {"eta_g", in.eta_g}, {"F", in.F}}},
            {"sl", report_json(sl)},
            {"fl", report_json(fl)},
            {"one_client",
             {{"total", json_real(one_client_bound(sl_in))}, {"lr_ok", in.eta <= lr_one}, {"lr_max", lr_one}}},
            {"drift_bound_at_stationary", drift},
            {"lr_max",
             {{"sl", lr_sl}, {"fl", lr_fl}, {"drift", max_lr_drift(c, in.N, in.K)}, {"one_client", lr_one},
              {"fl_over_sl", lr_fl / lr_sl}}},
            {"effective_lr",
             {{"sl", effective_lr(Algorithm::sl, in.N, in.K, in.eta)}, {"fl", effective_lr(Algorithm::fl, in.N, in.K, in.eta)}}},
            {"sl_corollary_rate", sl_corollary_rate(in.F, c, in.N, in.K, in.R)},
            {"round_complexity",
             {{"epsilon", spec.sweep.epsilon},
              {"sl", round_complexity(Algorithm::sl, in.F, c, in.N, in.K, spec.sweep.epsilon)},
              {"fl", round_complexity(Algorithm::fl, in.F, c, in.N, in.K, spec.sweep.epsilon)}}},
        };
        out.write_json(file_stem("bounds", std::nullopt, label) + ".json", report);
    }
    CommandResult result{out.path(), out.files(), ""};
    result.manifest = out.write_manifest("bounds", to_json(spec));
    return result;
}

CommandResult cmd_compare(const ExperimentSpec& input, const CommandOptions& options) {
    require_fields(input, {"objective.family", "train.rounds"});
    const ExperimentSpec spec = apply_options(input, options);
    if (!spec.sweep.equal_effective_lr) require_fields(spec, {"sweep.lr_grid"});
    const std::string hash = config_hash(spec);
    OutputDir out(resolve_out_dir(spec, options), hash);

    CsvTable csv(hash, {"distribution", "algorithm", "metric", "best", "best_stderr", "best_lr", "threshold_lr",
                        "all_diverged"});
    json rows = json::array();
    for (const auto& dist : distribution_list(spec)) {
        const BuiltObjective built = build_objective(spec.objective, spec.train.batch_size, dist);
        const std::size_t k = uniform_local_steps(spec.train, built.objective.get());
        for (Algorithm alg : spec.sweep.algorithms) {
            std::vector<double> grid = spec.sweep.lr_grid;
            if (spec.sweep.equal_effective_lr) {
                const double target = 1.0 / std::sqrt(static_cast<double>(spec.train.rounds));
                grid = {lr_for_effective(alg, spec.train.participants(), k, target)};
            }
            const SweepResult r = sweep_one(spec, built, alg, grid);
            const auto best = r.best_metric();
            std::size_t best_idx = 0;
            if (r.best_lr) best_idx = static_cast<std::size_t>(std::find(r.grid.begin(), r.grid.end(), *r.best_lr) - r.grid.begin());
            const double best_se = r.best_lr ? r.metric_stderr[best_idx] : std::nan("");
            csv.add_row({label_or_all(built.label), std::string(to_string(alg)), r.metric_name,
                         best ? format_real(*best) : "nan", format_real(best_se),
                         r.best_lr ? format_real(*r.best_lr) : "none", r.threshold_label(),
                         CsvTable::cell(r.all_diverged())});
            rows.push_back({{"distribution", label_or_all(built.label)},
                            {"algorithm", std::string(to_string(alg))},
                            {"metric", r.metric_name},
                            {"best", best ? json_real(*best) : json(nullptr)},
                            {"best_stderr", json_real(best_se)},
                            {"best_lr", r.best_lr ? json(*r.best_lr) : json(nullptr)},
                            {"threshold_lr", r.threshold_label()},
                            {"all_diverged", r.all_diverged()}});
        }
    }
    if (spec.output.format == "json") {
        out.write_json("compare.json", {{"config_hash", hash}, {"rows", rows}});
    } else {
        out.write("compare.csv", csv.render());
    }
    CommandResult result{out.path(), out.files(), ""};
    result.manifest = out.write_manifest("compare", to_json(spec));
    return result;
}

CommandResult cmd_sweep(const ExperimentSpec& input, const CommandOptions& options) {
    require_fields(input, {"objective.family", "train.rounds"});
    const ExperimentSpec spec = apply_options(input, options);
    const std::string hash = config_hash(spec);
    OutputDir out(resolve_out_dir(spec, options), hash);

    for (const auto& dist : distribution_list(spec)) {
        const BuiltObjective built = build_objective(spec.objective, spec.train.batch_size, dist);
        for (Algorithm alg : spec.sweep.algorithms) {
            const SweepResult r = sweep_one(spec, built, alg, spec.sweep.lr_grid);
            const std::string stem = file_stem("sweep", alg, built.label);
            const std::string flag = r.all_diverged() ? "all_diverged" : "ok";
            if (spec.output.format == "json") {
                json grid = json::array();
                for (std::size_t i = 0; i < r.grid.size(); ++i) {
                    grid.push_back({{"lr", r.grid[i]}, {"metric", json_real(r.metric[i])},
                                    {"metric_stderr", json_real(r.metric_stderr[i])}, {"diverged", r.diverged[i]}});
                }
                out.write_json(stem + ".json",
                               {{"config_hash", hash},
                                {"algorithm", std::string(to_string(alg))},
                                {"distribution", label_or_all(built.label)},
                                {"metric", r.metric_name},
                                {"grid", grid},
                                {"best_lr", r.best_lr ? json(*r.best_lr) : json(nullptr)},
                                {"threshold_lr", r.threshold_label()},
                                {"flag", flag}});
                continue;
            }
            CsvTable csv(hash, {"lr", "metric", "metric_stderr", "diverged"});
            csv.meta("algorithm", std::string(to_string(alg)));
            csv.meta("distribution", label_or_all(built.label));
            csv.meta("metric", r.metric_name);
            csv.meta("best_lr", r.best_lr ? format_real(*r.best_lr) : "none");
            csv.meta("threshold_lr", r.threshold_label());
            csv.meta("flag", flag);
            for (std::size_t i = 0; i < r.grid.size(); ++i) {
                csv.add_row({CsvTable::cell(r.grid[i]), CsvTable::cell(r.metric[i]), CsvTable::cell(r.metric_stderr[i]),
                             CsvTable::cell(static_cast<bool>(r.diverged[i]))});
            }
            out.write(stem + ".csv", csv.render());
        }
    }
    CommandResult result{out.path(), out.files(), ""};
    result.manifest = out.write_manifest("sweep", to_json(spec));
    return result;
}

std::vector<int> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot read labels file");
    std::vector<int> labels;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string item = line.substr(first, last - first + 1);
        std::size_t used = 0;
        long v = -1;
        try {
            v = std::stol(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size() || v < 0 || v > 1000000) {
            throw ConfigError(path, n, "expected a non-negative integer label, got '" + item + "'");
        }
        labels.push_back(static_cast<int>(v));
    }
    if (labels.empty()) throw ConfigError(path, 0, "labels file is empty");
    return labels;
}

CommandResult cmd_partition(const PartitionRequest& req, const CommandOptions& options) {
    const std::vector<int> labels = read_labels(req.labels_path);
    std::string labels_text;
    for (int y : labels) labels_text += std::to_string(y) + "\n";

    json request = {{"mechanism", req.mechanism}, {"clients", req.clients}, {"seed", req.seed},
                    {"labels_fnv1a", fnv1a_hex(labels_text)}, {"labels", labels.size()}};
    Partition p;
    if (req.mechanism == "dirichlet") {
        request["alpha"] = req.alpha;
        p = partition_dirichlet(labels, req.clients, req.alpha, req.seed);
    } else if (req.mechanism == "classes") {
        request["classes_per_client"] = req.classes_per_client;
        p = partition_classes(labels, req.clients, req.classes_per_client, req.seed);
    } else if (req.mechanism == "iid") {
        p = partition_iid(labels, req.clients, req.seed);
    } else {
        throw UsageError("unknown mechanism '" + req.mechanism + "' (expected dirichlet, classes or iid)");
    }
    const std::string hash = fnv1a_hex(request.dump());
    OutputDir out(options.out_dir.empty() ? resolve_out_dir(ExperimentSpec{}, options) : options.out_dir, hash);

    json params = json::object();
    for (const auto& [k, v] : p.params) params[k] = v;
    json clients = json::array();
    for (std::size_t i = 0; i < p.num_clients(); ++i) clients.push_back({{"client", i}, {"indices", p.assignments[i]}});
    out.write_json("partition.json", {{"config_hash", hash}, {"mechanism", p.mechanism}, {"params", params},
                                      {"seed", p.seed}, {"clients", clients}});

    const PartitionStats stats = partition_stats(p);
    const int classes = num_classes(labels);
    std::vector<std::string> columns{"client", "n_i", "p_i", "entropy", "classes_touched"};
    for (int c = 0; c < classes; ++c) columns.push_back("class_" + std::to_string(c));
    CsvTable csv(hash, columns);
    csv.meta("mechanism", p.mechanism);
    csv.meta("seed", std::to_string(p.seed));
    for (std::size_t i = 0; i < p.num_clients(); ++i) {
        std::vector<std::string> row{CsvTable::cell(i), CsvTable::cell(stats.sizes[i]), CsvTable::cell(stats.ratios[i]),
                                     CsvTable::cell(stats.entropy[i]), CsvTable::cell(stats.classes_touched[i])};
        for (int c = 0; c < classes; ++c) row.push_back(CsvTable::cell(p.class_counts[i][static_cast<std::size_t>(c)]));
        csv.add_row(std::move(row));
    }
    out.write("partition_stats.csv", csv.render());

    CommandResult result{out.path(), out.files(), ""};
    result.manifest = out.write_manifest("partition", request);
    return result;
}

}  // namespace splitlab::harness
