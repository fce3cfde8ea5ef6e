#include "splitlab/harness/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace splitlab::harness {

namespace {

std::string where(const std::string& source, std::size_t line) {
    return line ? source + ":" + std::to_string(line) : source;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(trim(s.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Value errors carry only the message; the caller adds source and line.
struct BadValue {
    std::string message;
};

double to_real(std::string_view s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || p != end || !std::isfinite(v)) {
        throw BadValue{"expected a finite number, got '" + std::string(s) + "'"};
    }
    return v;
}

std::uint64_t to_u64(std::string_view s) {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || p != end) {
        throw BadValue{"expected a non-negative integer, got '" + std::string(s) + "'"};
    }
    return v;
}

std::size_t to_count(std::string_view s) {
    const auto v = to_u64(s);
    if (v == 0) throw BadValue{"expected an integer >= 1, got '" + std::string(s) + "'"};
    return static_cast<std::size_t>(v);
}

double to_nonneg(std::string_view s) {
    const double v = to_real(s);
    if (v < 0.0) throw BadValue{"expected a number >= 0, got '" + std::string(s) + "'"};
    return v;
}

double to_positive(std::string_view s) {
    const double v = to_real(s);
    if (!(v > 0.0)) throw BadValue{"expected a number > 0, got '" + std::string(s) + "'"};
    return v;
}

bool to_bool(std::string_view s) {
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    throw BadValue{"expected true or false, got '" + std::string(s) + "'"};
}

std::string one_of(std::string_view s, std::initializer_list<std::string_view> allowed) {
    for (auto a : allowed) {
        if (s == a) return std::string(s);
    }
    std::string msg = "expected one of";
    for (auto a : allowed) msg += " " + std::string(a);
    throw BadValue{msg + ", got '" + std::string(s) + "'"};
}

Algorithm to_algorithm(std::string_view s) {
    try {
        return parse_algorithm(s);
    } catch (const UsageError& e) {
        throw BadValue{e.what()};
    }
}

using Setter = std::function<void(ExperimentSpec&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& fields() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"objective.family", [](auto& s, auto v) { s.objective.family = one_of(v, {"quadratic", "spectral", "logistic", "mlp", "constants"}); }},
        {"objective.clients", [](auto& s, auto v) { s.objective.clients = to_count(v); }},
        {"objective.dim", [](auto& s, auto v) { s.objective.dim = to_count(v); }},
        {"objective.smoothness", [](auto& s, auto v) { s.objective.smoothness = to_positive(v); }},
        {"objective.min_curvature", [](auto& s, auto v) { s.objective.min_curvature = to_positive(v); }},
        {"objective.heterogeneity", [](auto& s, auto v) { s.objective.heterogeneity = to_nonneg(v); }},
        {"objective.sigma", [](auto& s, auto v) { s.objective.sigma = to_nonneg(v); }},
        {"objective.B", [](auto& s, auto v) {
             s.objective.B = to_real(v);
             if (s.objective.B < 1.0) throw BadValue{"B must be >= 1"};
         }},
        {"objective.F", [](auto& s, auto v) { s.objective.F = to_nonneg(v); }},
        {"objective.init_offset", [](auto& s, auto v) { s.objective.init_offset = to_real(v); }},
        {"objective.init_scale", [](auto& s, auto v) { s.objective.init_scale = to_real(v); }},
        {"objective.seed", [](auto& s, auto v) { s.objective.seed = to_u64(v); }},
        {"objective.samples", [](auto& s, auto v) { s.objective.samples = to_count(v); }},
        {"objective.test_samples", [](auto& s, auto v) { s.objective.test_samples = static_cast<std::size_t>(to_u64(v)); }},
        {"objective.features", [](auto& s, auto v) { s.objective.features = to_count(v); }},
        {"objective.classes", [](auto& s, auto v) {
             const auto c = to_u64(v);
             if (c < 2) throw BadValue{"classes must be >= 2"};
             s.objective.classes = static_cast<int>(c);
         }},
        {"objective.separation", [](auto& s, auto v) { s.objective.separation = to_nonneg(v); }},
        {"objective.partition", [](auto& s, auto v) { s.objective.partition = one_of(v, {"iid", "dirichlet", "classes"}); }},
        {"objective.alpha", [](auto& s, auto v) { s.objective.alpha = to_positive(v); }},
        {"objective.classes_per_client", [](auto& s, auto v) { s.objective.classes_per_client = to_count(v); }},
        {"objective.cut_width", [](auto& s, auto v) { s.objective.cut_width = to_count(v); }},
        {"objective.regularization", [](auto& s, auto v) { s.objective.regularization = to_nonneg(v); }},

        {"train.algorithm", [](auto& s, auto v) { s.train.algorithm = to_algorithm(v); }},
        {"train.clients_per_round", [](auto& s, auto v) { s.train.clients_per_round = to_count(v); }},
        {"train.local_steps", [](auto& s, auto v) { s.train.local_steps = to_count(v); }},
        {"train.local_epochs", [](auto& s, auto v) { s.train.local_epochs = to_positive(v); }},
        {"train.batch_size", [](auto& s, auto v) { s.train.batch_size = to_count(v); }},
        {"train.lr", [](auto& s, auto v) { s.train.lr = to_nonneg(v); }},
        {"train.global_lr", [](auto& s, auto v) { s.train.global_lr = to_nonneg(v); }},
        {"train.rounds", [](auto& s, auto v) { s.train.rounds = to_count(v); }},
        {"train.seed", [](auto& s, auto v) { s.train.seed = to_u64(v); }},
        {"train.seeds", [](auto& s, auto v) {
             try {
                 s.seeds = parse_seed_list(v);
             } catch (const UsageError& e) {
                 throw BadValue{e.what()};
             }
         }},
        {"train.order", [](auto& s, auto v) {
             s.train.order = one_of(v, {"random", "fixed"}) == "fixed" ? OrderPolicy::fixed : OrderPolicy::random_per_round;
         }},
        {"train.divergence_factor", [](auto& s, auto v) {
             s.train.divergence_factor = to_real(v);
             if (!(s.train.divergence_factor > 1.0)) throw BadValue{"divergence_factor must be > 1"};
         }},

        {"sweep.lr_grid", [](auto& s, auto v) {
             s.sweep.lr_grid.clear();
             for (auto item : split_list(v)) s.sweep.lr_grid.push_back(to_positive(item));
             if (s.sweep.lr_grid.empty()) throw BadValue{"lr_grid is empty"};
             if (!std::is_sorted(s.sweep.lr_grid.begin(), s.sweep.lr_grid.end()) ||
                 std::adjacent_find(s.sweep.lr_grid.begin(), s.sweep.lr_grid.end()) != s.sweep.lr_grid.end()) {
                 throw BadValue{"lr_grid must be strictly ascending"};
             }
         }},
        {"sweep.algorithms", [](auto& s, auto v) {
             s.sweep.algorithms.clear();
             for (auto item : split_list(v)) s.sweep.algorithms.push_back(to_algorithm(item));
             if (s.sweep.algorithms.empty()) throw BadValue{"algorithms is empty"};
         }},
        {"sweep.distributions", [](auto& s, auto v) {
             s.sweep.distributions.clear();
             for (auto item : split_list(v)) s.sweep.distributions.push_back(to_nonneg(item));
         }},
        {"sweep.equal_effective_lr", [](auto& s, auto v) { s.sweep.equal_effective_lr = to_bool(v); }},
        {"sweep.epsilon", [](auto& s, auto v) { s.sweep.epsilon = to_positive(v); }},
        {"sweep.probes", [](auto& s, auto v) {
             s.sweep.probes = to_count(v);
             if (s.sweep.probes < 10) throw BadValue{"probes must be >= 10"};
         }},

        {"output.dir", [](auto& s, auto v) { s.output.dir = std::string(v); }},
        {"output.format", [](auto& s, auto v) { s.output.format = one_of(v, {"csv", "json"}); }},
        {"output.parallel", [](auto& s, auto v) { s.output.parallel = static_cast<int>(to_count(v)); }},
    };
    return table;
}

const std::set<std::string, std::less<>> kSections{"objective", "train", "sweep", "output"};

void assign(ExperimentSpec& spec, const std::string& section, std::string_view key, std::string_view value,
            std::size_t line) {
    const std::string name = section + "." + std::string(key);
    const auto& table = fields();
    const auto it = table.find(name);
    if (it == table.end()) {
        throw ConfigError(spec.source, line, "unknown key '" + std::string(key) + "' in [" + section + "]");
    }
    if (spec.present.count(name)) throw ConfigError(spec.source, line, "duplicate key '" + name + "'");
    try {
        it->second(spec, value);
    } catch (const BadValue& e) {
        throw ConfigError(spec.source, line, name + ": " + e.message);
    }
    spec.present.insert(name);
}

ExperimentSpec parse_ini(std::string_view text, std::string source) {
    ExperimentSpec spec;
    spec.source = std::move(source);
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(spec.source, line_no, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!kSections.count(section)) {
                throw ConfigError(spec.source, line_no,
                                  "unknown section [" + section + "] (expected objective, train, sweep, output)");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(spec.source, line_no, "expected 'key = value'");
        if (section.empty()) throw ConfigError(spec.source, line_no, "key outside of a [section]");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(spec.source, line_no, "empty key");
        assign(spec, section, key, trim(line.substr(eq + 1)), line_no);
    }
    return spec;
}

std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
}

ExperimentSpec parse_json(std::string_view text, std::string source) {
    ExperimentSpec spec;
    spec.source = std::move(source);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(spec.source, 0, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError(spec.source, 0, "top level must be an object");
    for (const auto& [section, body] : doc.items()) {
        if (section == "config_hash") continue;
        if (!kSections.count(section)) throw ConfigError(spec.source, 0, "unknown section '" + section + "'");
        if (!body.is_object()) throw ConfigError(spec.source, 0, "section '" + section + "' must be an object");
        for (const auto& [key, value] : body.items()) {
            if (value.is_null()) continue;
            std::string text_value;
            if (value.is_array()) {
                for (std::size_t i = 0; i < value.size(); ++i) text_value += (i ? "," : "") + scalar_text(value[i]);
            } else {
                text_value = scalar_text(value);
            }
            assign(spec, section, key, text_value, 0);
        }
    }
    return spec;
}

}  // namespace

ConfigError::ConfigError(std::string source, std::size_t line, const std::string& message)
    : UsageError(where(source, line) + ": " + message), line_(line) {}

std::vector<std::uint64_t> ExperimentSpec::run_seeds() const {
    return seeds.empty() ? std::vector<std::uint64_t>{train.seed} : seeds;
}

ExperimentSpec parse_spec(std::string_view text, std::string source) {
    const auto body = trim(text);
    if (!body.empty() && body.front() == '{') return parse_json(text, std::move(source));
    return parse_ini(text, std::move(source));
}

ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path, 0, "cannot read config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str(), path);
}

nlohmann::json to_json(const ExperimentSpec& s) {
    using nlohmann::json;
    const auto& o = s.objective;
    json obj = {
        {"family", o.family}, {"clients", o.clients}, {"dim", o.dim}, {"smoothness", o.smoothness},
        {"min_curvature", o.min_curvature}, {"heterogeneity", o.heterogeneity}, {"sigma", o.sigma},
        {"B", o.B}, {"init_offset", o.init_offset}, {"init_scale", o.init_scale}, {"seed", o.seed},
        {"samples", o.samples}, {"test_samples", o.test_samples}, {"features", o.features},
        {"classes", o.classes}, {"separation", o.separation}, {"partition", o.partition}, {"alpha", o.alpha},
        {"classes_per_client", o.classes_per_client}, {"cut_width", o.cut_width},
        {"regularization", o.regularization},
    };
    if (o.F) obj["F"] = *o.F;

    const auto& t = s.train;
    json train = {
        {"algorithm", std::string(to_string(t.algorithm))},
        {"local_steps", t.local_steps},
        {"batch_size", t.batch_size},
        {"lr", t.lr},
        {"global_lr", t.global_lr},
        {"rounds", t.rounds},
        {"seed", t.seed},
        {"order", t.order == OrderPolicy::fixed ? "fixed" : "random"},
        {"divergence_factor", t.divergence_factor},
    };
    if (t.clients_per_round) train["clients_per_round"] = t.clients_per_round;
    if (t.local_epochs) train["local_epochs"] = *t.local_epochs;
    if (!s.seeds.empty()) train["seeds"] = s.seeds;

    json algorithms = json::array();
    for (auto a : s.sweep.algorithms) algorithms.push_back(std::string(to_string(a)));
    json sweep = {
        {"lr_grid", s.sweep.lr_grid}, {"algorithms", algorithms}, {"distributions", s.sweep.distributions},
        {"equal_effective_lr", s.sweep.equal_effective_lr}, {"epsilon", s.sweep.epsilon}, {"probes", s.sweep.probes},
    };
    json output = {{"format", s.output.format}, {"parallel", s.output.parallel}};
    if (!s.output.dir.empty()) output["dir"] = s.output.dir;
    return {{"objective", obj}, {"train", train}, {"sweep", sweep}, {"output", output}};
}

std::string canonical_json(const ExperimentSpec& spec) {
    auto j = to_json(spec);
    j.erase("output");
    return j.dump();
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_hash(const ExperimentSpec& spec) { return fnv1a_hex(canonical_json(spec)); }

void require_fields(const ExperimentSpec& spec, std::initializer_list<std::string_view> names) {
    for (auto name : names) {
        if (!spec.present.count(std::string(name))) {
            const auto dot = name.find('.');
            throw ConfigError(spec.source, 0,
                              "missing required field '" + std::string(name) + "' (key '" +
                                  std::string(name.substr(dot + 1)) + "' in [" + std::string(name.substr(0, dot)) + "])");
        }
    }
}

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> out;
    for (auto item : split_list(text)) {
        try {
            const auto dash = item.find('-');
            if (dash == std::string_view::npos) {
                out.push_back(to_u64(item));
                continue;
            }
            const auto lo = to_u64(trim(item.substr(0, dash)));
            const auto hi = to_u64(trim(item.substr(dash + 1)));
            if (hi < lo) throw BadValue{"seed range '" + std::string(item) + "' is descending"};
            if (hi - lo >= 1000000) throw BadValue{"seed range '" + std::string(item) + "' is too long"};
            for (auto s = lo; s <= hi; ++s) out.push_back(s);
        } catch (const BadValue& e) {
            throw UsageError("seeds: " + e.message);
        }
    }
    if (out.empty()) throw UsageError("seeds: list is empty");
    return out;
}

}  // namespace splitlab::harness
