#pragma once

// Command-line front end. Exit codes: 0 success, 1 internal failure or a
// failed check, 2 usage or input error.

#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gdd/checkpoint.hpp"
#include "gdd/config.hpp"
#include "gdd/dataset.hpp"
#include "gdd/dep_graph.hpp"
#include "gdd/embeddings.hpp"
#include "gdd/metrics.hpp"
#include "gdd/model.hpp"
#include "gdd/proposition.hpp"
#include "gdd/synthetic.hpp"
#include "gdd/train.hpp"

namespace gdd {

namespace cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_usage = 2;

using nlohmann::json;

inline json tensor_json(const Tensor& t) {
    if (t.rank() <= 1) return json(t.values());
    json rows = json::array();
    for (std::size_t r = 0; r < t.dim(0); ++r) {
        const auto row = t.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

inline json awig_json(const Awig& g, const DepTree& tree) {
    json nodes = json::array(), edges = json::array();
    for (std::size_t i = 0; i < g.word_nodes.size(); ++i)
        nodes.push_back({{"token", g.word_nodes[i]}, {"text", tree.tokens[g.word_nodes[i]]}});
    for (const auto& e : g.edges)
        edges.push_back({{"node", e.node}, {"path", e.tag.path}, {"hops", e.tag.hops}, {"tag", e.tag.str()}});
    return {{"aspect_tokens", g.aspect_tokens}, {"nodes", nodes}, {"edges", edges}};
}

inline json trace_json(const Example& ex, const EncodedExample& enc, const Prediction& pred, const ForwardTrace& tr) {
    json beta = json::array(), omega = json::array(), rho = json::array(), empty = json::array();
    for (const auto& layer : tr.dgat) {
        json b = json::array(), o = json::array(), r = json::array();
        for (const auto& t : layer.beta) b.push_back(tensor_json(t));
        for (const auto& t : layer.omega) o.push_back(tensor_json(t));
        for (const auto& t : layer.rho) r.push_back(tensor_json(t));
        beta.push_back(b);
        omega.push_back(o);
        rho.push_back(r);
        empty.push_back(layer.empty);
    }
    return {{"tokens", ex.tokens},
            {"aspect", {ex.aspect_start, ex.aspect_end}},
            {"nodes", enc.awig.word_nodes},
            {"sigma", tr.local.sigma},
            {"mask", tensor_json(tr.local.mask)},
            {"local_attention", tensor_json(tr.local.attention)},
            {"dgat", {{"beta", beta}, {"omega", omega}, {"rho", rho}, {"empty", empty}}},
            {"probs", pred.probs},
            {"label", label_name(pred.label)}};
}

/// Config layering: defaults < GDD_SEED < config file < --key flags.
struct ConfigFlags {
    std::string file;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App* app) {
        app->add_option("--config", file, "flat key=value config file");
        for (const auto& k : ModelConfig::keys())
            options[k] = app->add_option("--" + k, values[k], "override config key " + k);
    }

    ModelConfig resolve(ModelConfig base) const {
        if (const char* env = std::getenv("GDD_SEED"); env && *env) base.set("seed", env);
        if (!file.empty()) apply_config_file(base, file);
        for (const auto& [k, opt] : options)
            if (opt->count() > 0) base.set(k, values.at(k));
        base.validate();
        return base;
    }
};

inline std::vector<EncodedExample> encode_all(const Model& m, const std::vector<Example>& data,
                                              const PrecomputedEmbeddings* pre) {
    std::vector<EncodedExample> out;
    out.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        try {
            out.push_back(m.encode(data[i], pre));
        } catch (const error& e) {
            throw value_error("example " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

inline std::uint64_t env_seed(std::uint64_t fallback) {
    const char* env = std::getenv("GDD_SEED");
    if (!env || !*env) return fallback;
    ModelConfig c;
    c.set("seed", env);
    return c.seed;
}

struct Spans {
    std::size_t sentence = 0;
    std::size_t start = 0, end = 0;
};

inline std::vector<Spans> load_spans(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open spans file '" + path + "'");
    std::vector<Spans> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            out.push_back({j.at("sentence").get<std::size_t>(), j.at("aspect_start").get<std::size_t>(),
                           j.at("aspect_end").get<std::size_t>()});
        } catch (const json::exception& e) {
            throw parse_error(lineno, std::string("invalid span record: ") + e.what(), path);
        }
        if (out.back().end <= out.back().start)
            throw parse_error(lineno, "aspect_end must exceed aspect_start", path);
    }
    return out;
}

inline std::vector<DepTree> load_conllu(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open CoNLL-U file '" + path + "'");
    try {
        return parse_conllu(in);
    } catch (const parse_error& e) {
        throw e.with_source(path);
    }
}

inline int cmd_train(const ConfigFlags& flags, const std::string& train_path, const std::string& dev_path,
                     const std::string& out_path, const std::string& emb_path, std::ostream& out) {
    const ModelConfig cfg = flags.resolve(ModelConfig{});
    const auto train_data = load_dataset(train_path);
    const auto dev_data = dev_path.empty() ? std::vector<Example>{} : load_dataset(dev_path);
    std::optional<PrecomputedEmbeddings> pre;
    if (!emb_path.empty()) pre = PrecomputedEmbeddings::load(emb_path);

    Model model = Model::from_data(cfg, train_data);
    const auto train_enc = encode_all(model, train_data, pre ? &*pre : nullptr);
    const auto dev_enc = encode_all(model, dev_data, pre ? &*pre : nullptr);
    train(model, train_enc, dev_enc, [&](const EpochStats& s) {
        json line = {{"epoch", s.epoch}, {"train_loss", s.train_loss}, {"dev_acc", nullptr}, {"dev_macro_f1", nullptr}};
        if (s.dev) {
            line["dev_acc"] = s.dev->accuracy;
            line["dev_macro_f1"] = s.dev->macro_f1;
        }
        out << line.dump() << '\n' << std::flush;
    });
    save_checkpoint(model, out_path);
    return exit_ok;
}

inline int cmd_eval(const std::string& ckpt, const std::string& data_path, const std::string& emb_path,
                    std::ostream& out) {
    const Model model = load_checkpoint(ckpt);
    const auto data = load_dataset(data_path);
    std::optional<PrecomputedEmbeddings> pre;
    if (!emb_path.empty()) pre = PrecomputedEmbeddings::load(emb_path);
    out << metrics_to_json(evaluate(model, encode_all(model, data, pre ? &*pre : nullptr))).dump() << '\n';
    return exit_ok;
}

inline int cmd_build_graph(const std::string& conllu, const std::string& spans_path, std::size_t kappa_max,
                           bool drop_punct, std::ostream& out) {
    const auto trees = load_conllu(conllu);
    const auto spans = load_spans(spans_path);
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto& s = spans[i];
        if (s.sentence >= trees.size())
            throw parse_error(i + 1, "sentence " + std::to_string(s.sentence) + " not in CoNLL-U input (" +
                                         std::to_string(trees.size()) + " sentences)", spans_path);
        const DepTree& t = trees[s.sentence];
        Awig g;
        try {
            g = build_awig(t, Span{s.start, s.end - 1}, AwigOptions{kappa_max, drop_punct});
        } catch (const value_error& e) {
            throw parse_error(i + 1, e.what(), spans_path);
        }
        json j = awig_json(g, t);
        j["sentence"] = s.sentence;
        out << j.dump() << '\n';
    }
    return exit_ok;
}

inline int cmd_inspect(const std::string& ckpt, const std::string& data_path, std::size_t index,
                       const std::string& emb_path, std::ostream& out) {
    const Model model = load_checkpoint(ckpt);
    const auto data = load_dataset(data_path);
    if (index >= data.size())
        throw value_error("example index " + std::to_string(index) + " out of range (" + std::to_string(data.size()) +
                          " examples)");
    std::optional<PrecomputedEmbeddings> pre;
    if (!emb_path.empty()) pre = PrecomputedEmbeddings::load(emb_path);
    const EncodedExample enc = model.encode(data[index], pre ? &*pre : nullptr);
    ForwardTrace tr;
    const Prediction p = model.predict(enc, &tr);
    out << trace_json(data[index], enc, p, tr).dump() << '\n';
    return exit_ok;
}

struct PropositionArgs {
    std::uint64_t seed = 42;
    std::size_t n = 6, d = 4, trials = 20, draws = 100;
    double tolerance = 1e-5;
};

inline int cmd_verify_proposition(const PropositionArgs& a, std::ostream& out) {
    if (a.n < 2) throw value_error("verify-proposition: N must be at least 2");
    if (a.d == 0 || a.trials == 0) throw value_error("verify-proposition: d and trials must be positive");
    std::size_t passed = 0;
    std::uint64_t seed = a.seed;
    for (std::size_t trial = 0; trial < a.trials; ++trial) {
        for (;; ++seed) {
            Rng rng(seed);
            Tensor Q({a.n, a.d}), K({a.n, a.d});
            for (double& v : Q.data()) v = rng.uniform(-1.0, 1.0);
            for (double& v : K.data()) v = rng.uniform(-1.0, 1.0);
            StationarityReport r;
            try {
                r = check_stationarity(Q, K, rng, {1e-6, a.tolerance, a.draws});
            } catch (const value_error&) {
                continue; // degenerate instance
            }
            passed += r.is_stationary;
            out << json{{"trial", trial},
                        {"seed", seed},
                        {"grad_norm_at_mean", r.grad_norm_at_mean},
                        {"median_grad_norm", r.median_grad_norm},
                        {"ratio", r.ratio},
                        {"pass", r.is_stationary}}
                       .dump()
                << '\n';
            ++seed;
            break;
        }
    }
    out << json{{"trials", a.trials}, {"passed", passed}, {"pass", passed == a.trials}}.dump() << '\n';
    return passed == a.trials ? exit_ok : exit_failure;
}

/// The far-template example: the opinion word is distant in token order but
/// adjacent in the tree, so both encoders carry signal.
inline Example gradcheck_example(std::uint64_t seed) {
    Rng rng = Rng(seed).fork("gradcheck");
    return detail::far_template(rng, Label::negative);
}

inline int cmd_gradcheck(const ConfigFlags& flags, double tolerance, double eps, std::ostream& out) {
    ModelConfig cfg = flags.resolve(ModelConfig::toy());
    if (cfg.dropout != 0.0) throw value_error("gradcheck: dropout must be 0");
    const Example ex = gradcheck_example(cfg.seed);
    Model model = Model::from_data(cfg, {ex});
    const auto rep = gradcheck_model(model, model.encode(ex), eps);
    for (const auto& t : rep.tensors)
        out << json{{"name", t.name},
                    {"size", t.size},
                    {"max_rel_err", t.max_rel_err},
                    {"max_abs_err", t.max_abs_err},
                    {"finite", t.finite},
                    {"pass", t.finite && t.max_rel_err < tolerance}}
                   .dump()
            << '\n';
    const bool ok = rep.passed(tolerance);
    out << json{{"tensors", rep.tensors.size()}, {"worst_rel_err", rep.worst()}, {"tolerance", tolerance}, {"pass", ok}}
               .dump()
        << '\n';
    return ok ? exit_ok : exit_failure;
}

inline int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out_path, std::ostream& out) {
    const auto data = generate_synthetic(n, seed);
    if (out_path.empty() || out_path == "-") {
        write_dataset(out, data);
        return exit_ok;
    }
    std::ofstream f(out_path);
    if (!f) throw io_error("cannot open '" + out_path + "' for writing");
    write_dataset(f, data);
    return exit_ok;
}

} // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    using namespace cli;
    CLI::App app{"GDD aspect sentiment classifier", "gdd"};
    app.require_subcommand(1);

    auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
    ConfigFlags train_flags;
    train_flags.attach(train_cmd);
    std::string train_path, dev_path, out_path, emb_path;
    train_cmd->add_option("--train", train_path, "training set (JSONL)")->required();
    train_cmd->add_option("--dev", dev_path, "dev set (JSONL)");
    train_cmd->add_option("--out", out_path, "checkpoint path")->required();
    train_cmd->add_option("--embeddings", emb_path, "precomputed token vectors (JSONL)");

    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a dataset");
    std::string ckpt, data_path;
    eval_cmd->add_option("--checkpoint", ckpt)->required();
    eval_cmd->add_option("--data", data_path)->required();
    eval_cmd->add_option("--embeddings", emb_path);

    auto* graph_cmd = app.add_subcommand("build-graph", "emit the aspect-word graph of each aspect span");
    std::string conllu, spans;
    std::size_t kappa_max = 3;
    bool drop_punct = false;
    graph_cmd->add_option("--conllu", conllu)->required();
    graph_cmd->add_option("--spans", spans, "JSONL {sentence, aspect_start, aspect_end}")->required();
    graph_cmd->add_option("--kappa_max", kappa_max)->check(CLI::PositiveNumber);
    graph_cmd->add_flag("--drop_punct", drop_punct);

    auto* inspect_cmd = app.add_subcommand("inspect", "dump mask and attention traces for one example");
    std::size_t index = 0;
    inspect_cmd->add_option("--checkpoint", ckpt)->required();
    inspect_cmd->add_option("--data", data_path)->required();
    inspect_cmd->add_option("--index", index, "0-based line of the example");
    inspect_cmd->add_option("--embeddings", emb_path);

    auto* prop_cmd = app.add_subcommand("verify-proposition", "check the objective is stationary at the means");
    PropositionArgs prop;
    auto* prop_seed = prop_cmd->add_option("--seed", prop.seed);
    prop_cmd->add_option("--n", prop.n, "vectors per instance");
    prop_cmd->add_option("--d", prop.d, "dimension");
    prop_cmd->add_option("--trials", prop.trials);
    prop_cmd->add_option("--draws", prop.draws, "random points per instance");
    prop_cmd->add_option("--tolerance", prop.tolerance);

    auto* grad_cmd = app.add_subcommand("gradcheck", "compare analytic and numeric gradients at toy dims");
    ConfigFlags grad_flags;
    grad_flags.attach(grad_cmd);
    double tolerance = 1e-4, eps = 1e-6;
    grad_cmd->add_option("--tolerance", tolerance);
    grad_cmd->add_option("--eps", eps);

    auto* synth_cmd = app.add_subcommand("synth", "write a seeded synthetic dataset");
    std::size_t synth_n = 32;
    std::uint64_t synth_seed = 42;
    std::string synth_out;
    synth_cmd->add_option("--n", synth_n);
    auto* synth_seed_opt = synth_cmd->add_option("--seed", synth_seed);
    synth_cmd->add_option("--out", synth_out, "output path, stdout when omitted");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return exit_usage;
    }

    try {
        if (*train_cmd) return cmd_train(train_flags, train_path, dev_path, out_path, emb_path, out);
        if (*eval_cmd) return cmd_eval(ckpt, data_path, emb_path, out);
        if (*graph_cmd) return cmd_build_graph(conllu, spans, kappa_max, drop_punct, out);
        if (*inspect_cmd) return cmd_inspect(ckpt, data_path, index, emb_path, out);
        if (*prop_cmd) {
            if (prop_seed->count() == 0) prop.seed = env_seed(prop.seed);
            return cmd_verify_proposition(prop, out);
        }
        if (*grad_cmd) return cmd_gradcheck(grad_flags, tolerance, eps, out);
        if (*synth_cmd) {
            if (synth_seed_opt->count() == 0) synth_seed = env_seed(synth_seed);
            return cmd_synth(synth_n, synth_seed, synth_out, out);
        }
    } catch (const numeric_error& e) {
        err << "gdd: " << e.what() << '\n';
        return exit_failure;
    } catch (const error& e) {
        err << "gdd: " << e.what() << '\n';
        return exit_usage;
    } catch (const nlohmann::json::exception& e) {
        err << "gdd: malformed input: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "gdd: internal error: " << e.what() << '\n';
        return exit_failure;
    }
    return exit_usage;
}

} // namespace gdd
