#include "curv/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "curv/autodiff.hpp"
#include "curv/matrix_io.hpp"
#include "curv/rng.hpp"

namespace curv {

namespace {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

json model_to_json(const ModelSpec& m) {
    return json{{"layer_widths", m.layer_widths},
                {"hidden_activation", activation_to_string(m.hidden_activation)},
                {"output_mode", output_mode_to_string(m.output_mode)}};
}

ModelSpec model_from_json(const json& j) {
    ModelSpec m;
    m.layer_widths = j.at("layer_widths").get<std::vector<std::size_t>>();
    if (j.contains("hidden_activation"))
        m.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
    if (j.contains("output_mode"))
        m.output_mode = output_mode_from_string(j.at("output_mode").get<std::string>());
    m.validate();
    return m;
}

json config_to_json(const RunConfig& cfg) {
    return json{{"model", model_to_json(cfg.model)},
                {"dataset", cfg.dataset_path},
                {"seed", cfg.seed},
                {"sgd",
                 {{"learning_rate", cfg.sgd.learning_rate},
                  {"epochs", cfg.sgd.epochs},
                  {"batch_size", cfg.sgd.batch_size}}},
                {"curvature",
                 {{"batch_size_h", cfg.curvature.batch_size_h},
                  {"batch_size_g", cfg.curvature.batch_size_g},
                  {"parallelism", cfg.curvature.parallelism},
                  {"memory_cap", cfg.curvature.memory_cap}}},
                {"lanczos",
                 {{"k", cfg.lanczos.k},
                  {"max_iterations", cfg.lanczos.max_iterations},
                  {"residual_tol", cfg.lanczos.residual_tol},
                  {"seed", cfg.lanczos.seed}}},
                {"output_dir", cfg.output_dir}};
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

void write_sidecar(const std::string& output_path, json meta, const std::string& hash) {
    meta["config_hash"] = hash;
    write_json_file(output_path + ".meta.json", meta);
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("bad config JSON in " + path + ": " + e.what());
    }
    RunConfig cfg;
    cfg.model = model_from_json(j.at("model"));
    if (j.contains("dataset")) cfg.dataset_path = j.at("dataset").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("sgd")) {
        const json& s = j.at("sgd");
        if (s.contains("learning_rate")) cfg.sgd.learning_rate = s.at("learning_rate").get<double>();
        if (s.contains("epochs")) cfg.sgd.epochs = s.at("epochs").get<std::size_t>();
        if (s.contains("batch_size")) cfg.sgd.batch_size = s.at("batch_size").get<std::size_t>();
    }
    if (j.contains("curvature")) {
        const json& c = j.at("curvature");
        if (c.contains("batch_size_h")) cfg.curvature.batch_size_h = c.at("batch_size_h").get<std::size_t>();
        if (c.contains("batch_size_g")) cfg.curvature.batch_size_g = c.at("batch_size_g").get<std::size_t>();
        if (c.contains("parallelism")) cfg.curvature.parallelism = c.at("parallelism").get<std::size_t>();
        if (c.contains("memory_cap")) cfg.curvature.memory_cap = c.at("memory_cap").get<std::size_t>();
    }
    if (j.contains("lanczos")) {
        const json& l = j.at("lanczos");
        if (l.contains("k")) cfg.lanczos.k = l.at("k").get<std::size_t>();
        if (l.contains("max_iterations"))
            cfg.lanczos.max_iterations = l.at("max_iterations").get<std::size_t>();
        if (l.contains("residual_tol")) cfg.lanczos.residual_tol = l.at("residual_tol").get<double>();
        if (l.contains("seed")) cfg.lanczos.seed = l.at("seed").get<std::uint64_t>();
    }
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
    if (cfg.sgd.epochs < 1 || cfg.sgd.batch_size < 1 || !(cfg.sgd.learning_rate >= 0.0))
        throw ContractError("config: sgd counts must be >= 1 and learning_rate >= 0");
    return cfg;
}

std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_to_json(cfg).dump())));
    return std::string(buf);
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    DenseVector flat(param_count(spec));
    std::size_t at = 0;
    for (std::size_t k = 0; k + 1 < spec.layer_widths.size(); ++k) {
        const std::size_t tin = spec.layer_widths[k];
        const std::size_t tout = spec.layer_widths[k + 1];
        const double r = std::sqrt(6.0 / static_cast<double>(tin + tout));
        for (std::size_t i = 0; i < tin * tout; ++i)
            flat[at++] = (2.0 * rng.next_uniform() - 1.0) * r;
        at += tout;  // biases start at zero
    }
    return ParamVector{std::move(flat)};
}

TrainResult train_sgd(const ModelSpec& spec, const Batch& data, const SgdConfig& sgd,
                      std::uint64_t seed) {
    const std::size_t n = data.size();
    if (sgd.batch_size < 1 || n % sgd.batch_size != 0)
        throw ContractError("train_sgd: dataset size " + std::to_string(n) +
                            " is not divisible by batch size " + std::to_string(sgd.batch_size));
    ParamVector params = init_params(spec, seed);
    Rng shuffle_rng(seed ^ 0x5DEECE66DULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    const std::size_t nbatches = n / sgd.batch_size;
    for (std::size_t epoch = 0; epoch < sgd.epochs; ++epoch) {
        // Fisher-Yates with the deterministic generator.
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.next_u64() % (i + 1));
            std::swap(order[i], order[j]);
        }
        for (std::size_t b = 0; b < nbatches; ++b) {
            DenseMatrix bx(sgd.batch_size, data.x.cols());
            DenseMatrix by(sgd.batch_size, data.y.cols());
            for (std::size_t i = 0; i < sgd.batch_size; ++i) {
                const std::size_t src = order[b * sgd.batch_size + i];
                std::copy(data.x.row(src), data.x.row(src) + data.x.cols(), bx.row(i));
                std::copy(data.y.row(src), data.y.row(src) + data.y.cols(), by.row(i));
            }
            const GradResult g = grad_batch(spec, params, Batch{std::move(bx), std::move(by)});
            const double step = sgd.learning_rate / static_cast<double>(sgd.batch_size);
            for (std::size_t i = 0; i < params.p(); ++i) params.data[i] -= step * g.grad_total[i];
        }
        const double c = cost(spec, params, data);
        if (!std::isfinite(c))
            throw std::runtime_error("train_sgd: cost is not finite after epoch " +
                                     std::to_string(epoch + 1) + "; aborting");
        result.cost_per_epoch.push_back(c);
    }
    result.params = std::move(params);
    return result;
}

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> threads;
};

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg = load_run_config(f.config_path);
    if (f.seed) cfg.seed = *f.seed;
    if (f.out) cfg.output_dir = *f.out;
    if (f.threads) cfg.curvature.parallelism = *f.threads;
    std::filesystem::create_directories(cfg.output_dir);
    return cfg;
}

ParamVector load_params(const ModelSpec& spec, const std::string& path) {
    DenseVector v = read_vector(path);
    if (v.len() != param_count(spec))
        throw ShapeError("parameter file " + path + " has " + std::to_string(v.len()) +
                         " entries, model needs " + std::to_string(param_count(spec)));
    return ParamVector{std::move(v)};
}

enum class ExportFormat { bin, csv };

void export_matrix(const std::string& path, const DenseMatrix& m, ExportFormat fmt,
                   MatrixDtype dtype) {
    if (fmt == ExportFormat::csv)
        write_matrix_csv(path, m);
    else
        write_matrix(path, m, dtype);
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

int cmd_gen_data(std::size_t t1, std::size_t tl, std::size_t n, std::uint64_t seed,
                 const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const Batch data = generate_dataset(t1, tl, n, seed);
    const std::string path = join_path(out_dir, "dataset.csv");
    write_dataset_csv(path, data);
    const json meta{{"command", "gen-data"}, {"t1", t1}, {"tl", tl}, {"n", n}, {"seed", seed}};
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(meta.dump())));
    write_sidecar(path, meta, buf);
    std::cout << path << "\n";
    return 0;
}

int cmd_train(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    const Batch data = read_dataset_csv(cfg.dataset_path);
    const TrainResult tr = train_sgd(cfg.model, data, cfg.sgd, cfg.seed);
    const std::string hash = config_hash(cfg);

    const std::string params_path = join_path(cfg.output_dir, "params.bin");
    write_vector(params_path, tr.params.data);
    write_sidecar(params_path, json{{"command", "train"}, {"n", data.size()},
                                    {"epochs", cfg.sgd.epochs}, {"seed", cfg.seed}},
                  hash);
    json metrics{{"cost_per_epoch", tr.cost_per_epoch},
                 {"final_cost", tr.cost_per_epoch.back()},
                 {"config_hash", hash}};
    write_json_file(join_path(cfg.output_dir, "train_metrics.json"), metrics);
    std::cout << params_path << "\n";
    return 0;
}

int cmd_hessian(const CommonFlags& flags, const std::string& params_path, ExportFormat fmt,
                MatrixDtype dtype) {
    const RunConfig cfg = resolve_config(flags);
    const Batch data = read_dataset_csv(cfg.dataset_path);
    const ParamVector params = load_params(cfg.model, params_path);
    const HessianResult hr = assemble_hessian(cfg.model, params, data, cfg.curvature);

    const std::string path =
        join_path(cfg.output_dir, fmt == ExportFormat::csv ? "H.csv" : "H.bin");
    export_matrix(path, hr.h, fmt, dtype);
    write_sidecar(path,
                  json{{"command", "hessian"},
                       {"n", data.size()},
                       {"batch_size_h", cfg.curvature.batch_size_h},
                       {"asymmetry", hr.asymmetry}},
                  config_hash(cfg));
    std::cout << path << "\n";
    return 0;
}

int cmd_opg(const CommonFlags& flags, const std::string& params_path, ExportFormat fmt,
            MatrixDtype dtype) {
    const RunConfig cfg = resolve_config(flags);
    const Batch data = read_dataset_csv(cfg.dataset_path);
    const ParamVector params = load_params(cfg.model, params_path);
    const DenseMatrix g = assemble_opg(cfg.model, params, data, cfg.curvature);

    const std::string path =
        join_path(cfg.output_dir, fmt == ExportFormat::csv ? "G.csv" : "G.bin");
    export_matrix(path, g, fmt, dtype);
    write_sidecar(path,
                  json{{"command", "opg"},
                       {"n", data.size()},
                       {"batch_size_g", cfg.curvature.batch_size_g}},
                  config_hash(cfg));
    std::cout << path << "\n";
    return 0;
}

int cmd_eigs(const CommonFlags& flags, const std::string& params_path, const std::string& method,
             std::optional<std::size_t> k_flag, std::optional<double> shift, ExportFormat fmt,
             MatrixDtype dtype) {
    const RunConfig cfg = resolve_config(flags);
    const Batch data = read_dataset_csv(cfg.dataset_path);
    const ParamVector params = load_params(cfg.model, params_path);
    const std::size_t p = param_count(cfg.model);
    const std::size_t k = k_flag.value_or(cfg.lanczos.k);
    const std::string hash = config_hash(cfg);

    EigenPairs pairs;
    json meta{{"command", "eigs"}, {"method", method}, {"k", k}, {"n", data.size()}};
    if (method == "lanczos_h") {
        const HvpOperator hop(cfg.model, params, data, cfg.curvature.batch_size_h);
        LinearOp op;
        if (shift) {
            // Non-standard shifted mode: eigenpairs of sigma*I - H, exposing
            // the large negative-curvature end of an indefinite spectrum.
            const double sigma = *shift;
            op = [&hop, sigma](const DenseVector& v) {
                DenseVector hv = hop.apply(v);
                for (std::size_t i = 0; i < hv.len(); ++i) hv[i] = sigma * v[i] - hv[i];
                return hv;
            };
            meta["shift"] = sigma;
        } else {
            op = [&hop](const DenseVector& v) { return hop.apply(v); };
        }
        LanczosConfig lcfg = cfg.lanczos;
        lcfg.k = k;
        if (lcfg.max_iterations < lcfg.k) lcfg.max_iterations = std::min(p, 10 * lcfg.k);
        LanczosResult lr = lanczos_topk(op, p, lcfg);
        meta["iterations"] = lr.iterations;
        meta["residuals"] = std::vector<double>(lr.residuals.data(),
                                                lr.residuals.data() + lr.residuals.len());
        meta["seed"] = lcfg.seed;
        pairs = std::move(lr.pairs);
    } else if (method == "incremental_g") {
        const std::size_t bsg = cfg.curvature.batch_size_g;
        if (data.size() % bsg != 0)
            throw ContractError("eigs: dataset size is not divisible by batch_size_g");
        IncrementalOpgEigs acc(p, k);
        for (std::size_t b = 0; b < data.size() / bsg; ++b)
            acc.push_block(assemble_jacobian(cfg.model, params, slice_batch(data, b * bsg, bsg)));
        pairs = acc.finalize(data.size());
        meta["batch_size_g"] = bsg;
        meta["updates"] = acc.updates();
    } else {
        throw ContractError("eigs: unknown method '" + method +
                            "' (expected lanczos_h or incremental_g)");
    }

    const bool csv = fmt == ExportFormat::csv;
    const std::string q_path = join_path(cfg.output_dir, csv ? "eigs_Q.csv" : "eigs_Q.bin");
    const std::string l_path =
        join_path(cfg.output_dir, csv ? "eigs_lambda.csv" : "eigs_lambda.bin");
    export_matrix(q_path, pairs.q, fmt, dtype);
    DenseMatrix lambda_col(pairs.lambda.len(), 1,
                           std::vector<double>(pairs.lambda.data(),
                                               pairs.lambda.data() + pairs.lambda.len()));
    export_matrix(l_path, lambda_col, fmt, dtype);
    meta["config_hash"] = hash;
    write_json_file(join_path(cfg.output_dir, "eigs.meta.json"), meta);
    std::cout << q_path << "\n" << l_path << "\n";
    return 0;
}

int cmd_quadform(const std::string& q_path, const std::string& lambda_path,
                 const std::string& mode, std::optional<double> lambda_tilde,
                 const std::string& x_path) {
    EigenPairs pairs;
    pairs.q = read_matrix(q_path);
    pairs.lambda = read_vector(lambda_path);
    validate_eigen_pairs(pairs);
    const DenseVector x = read_vector(x_path);

    double value;
    if (mode == "low_rank") {
        value = low_rank_quadform(pairs, x);
    } else if (mode == "full_rank") {
        const double lt = lambda_tilde ? *lambda_tilde : default_lambda_tilde(pairs);
        value = full_rank_quadform(pairs, lt, x);
    } else {
        throw ContractError("quadform: unknown mode '" + mode +
                            "' (expected low_rank or full_rank)");
    }
    std::printf("%.17g\n", value);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"curvkit: exact Hessian, OPG, and approximate eigendecomposition toolkit "
                 "for dense feed-forward networks"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic one-hot dataset CSV");
    std::size_t gd_t1 = 4, gd_tl = 3, gd_n = 100;
    std::uint64_t gd_seed = 0;
    std::string gd_out = ".";
    gen->add_option("--t1", gd_t1, "feature count")->required();
    gen->add_option("--tl", gd_tl, "class count")->required();
    gen->add_option("--n", gd_n, "number of examples")->required();
    gen->add_option("--seed", gd_seed, "generator seed");
    gen->add_option("--out", gd_out, "output directory");

    auto add_common = [](CLI::App* cmd, CommonFlags& f) {
        cmd->add_option("--config", f.config_path, "run config JSON")->required();
        cmd->add_option("--seed", f.seed, "override config seed");
        cmd->add_option("--out", f.out, "override output directory");
        cmd->add_option("--threads", f.threads, "override curvature parallelism");
    };

    auto add_export = [](CLI::App* cmd, std::string& fmt, std::string& dtype) {
        cmd->add_option("--format", fmt, "output format: bin or csv")
            ->check(CLI::IsMember({"bin", "csv"}));
        cmd->add_option("--dtype", dtype, "binary payload dtype: f64 or f32")
            ->check(CLI::IsMember({"f64", "f32"}));
    };

    // train
    auto* train = app.add_subcommand("train", "SGD to obtain an evaluation point");
    CommonFlags train_flags;
    add_common(train, train_flags);

    // hessian
    auto* hess = app.add_subcommand("hessian", "assemble the exact Hessian matrix");
    CommonFlags hess_flags;
    std::string hess_params, hess_fmt = "bin", hess_dtype = "f64";
    add_common(hess, hess_flags);
    hess->add_option("--params", hess_params, "parameter file")->required();
    add_export(hess, hess_fmt, hess_dtype);

    // opg
    auto* opg = app.add_subcommand("opg", "assemble the outer-product-of-gradients matrix");
    CommonFlags opg_flags;
    std::string opg_params, opg_fmt = "bin", opg_dtype = "f64";
    add_common(opg, opg_flags);
    opg->add_option("--params", opg_params, "parameter file")->required();
    add_export(opg, opg_fmt, opg_dtype);

    // eigs
    auto* eigs = app.add_subcommand("eigs", "top-K eigenpairs of H (Lanczos) or G (incremental SVD)");
    CommonFlags eigs_flags;
    std::string eigs_params, eigs_method, eigs_fmt = "bin", eigs_dtype = "f64";
    std::optional<std::size_t> eigs_k;
    std::optional<double> eigs_shift;
    add_common(eigs, eigs_flags);
    eigs->add_option("--params", eigs_params, "parameter file")->required();
    eigs->add_option("--method", eigs_method, "lanczos_h or incremental_g")->required();
    eigs->add_option("--k", eigs_k, "number of eigenpairs (overrides config)");
    eigs->add_option("--shift", eigs_shift,
                     "lanczos_h only: solve sigma*I - H instead of H (non-standard extension)");
    add_export(eigs, eigs_fmt, eigs_dtype);

    // quadform
    auto* quad = app.add_subcommand("quadform", "evaluate x^T H~ x from stored eigenpairs");
    std::string quad_q, quad_lambda, quad_mode, quad_x;
    std::optional<double> quad_lt;
    quad->add_option("--q", quad_q, "eigenvector matrix file")->required();
    quad->add_option("--lambda", quad_lambda, "eigenvalue file")->required();
    quad->add_option("--mode", quad_mode, "low_rank or full_rank")->required();
    quad->add_option("--lambda-tilde", quad_lt, "tail eigenvalue (default: smallest retained)");
    quad->add_option("--x", quad_x, "vector file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    auto to_fmt = [](const std::string& s) {
        return s == "csv" ? ExportFormat::csv : ExportFormat::bin;
    };
    auto to_dtype = [](const std::string& s) {
        return s == "f32" ? MatrixDtype::f32 : MatrixDtype::f64;
    };

    try {
        if (gen->parsed()) return cmd_gen_data(gd_t1, gd_tl, gd_n, gd_seed, gd_out);
        if (train->parsed()) return cmd_train(train_flags);
        if (hess->parsed())
            return cmd_hessian(hess_flags, hess_params, to_fmt(hess_fmt), to_dtype(hess_dtype));
        if (opg->parsed())
            return cmd_opg(opg_flags, opg_params, to_fmt(opg_fmt), to_dtype(opg_dtype));
        if (eigs->parsed())
            return cmd_eigs(eigs_flags, eigs_params, eigs_method, eigs_k, eigs_shift,
                            to_fmt(eigs_fmt), to_dtype(eigs_dtype));
        if (quad->parsed())
            return cmd_quadform(quad_q, quad_lambda, quad_mode, quad_lt, quad_x);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}

}  // namespace curv
