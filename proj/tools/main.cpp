#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sphwave/config.hpp"
#include "sphwave/decoderopt.hpp"
#include "sphwave/eval.hpp"
#include "sphwave/io.hpp"
#include "sphwave/waveletopt.hpp"

namespace {

using namespace sphwave;

std::uint64_t resolve_seed(std::uint64_t cli_seed) {
    if (const char* env = std::getenv("SPHWAVE_SEED")) return std::strtoull(env, nullptr, 10);
    return cli_seed;
}

struct SwfContext {
    std::shared_ptr<SubdivisionMesh> mesh;
    std::shared_ptr<FilterBank> bank;
};

/// Mesh + bank for an SWF format spec. Closed-form families are rebuilt in
/// memory; the optimized family must come from filter files.
SwfContext make_swf_context(const FormatSpec& spec, const std::string& mesh_dir,
                            const std::string& filters_dir, int default_levels) {
    SwfContext ctx;
    if (!mesh_dir.empty()) {
        ctx.mesh = std::make_shared<SubdivisionMesh>(load_mesh(mesh_dir));
    } else {
        ctx.mesh = std::make_shared<SubdivisionMesh>(build_mesh(default_levels));
    }
    if (!filters_dir.empty()) {
        ctx.bank = std::make_shared<FilterBank>(load_filter_bank(filters_dir));
    } else {
        const WaveletFamily family = parse_family(spec.family);
        if (family == WaveletFamily::optimized || family == WaveletFamily::custom)
            throw std::invalid_argument(
                "format '" + spec.to_string() + "' needs --filters with saved matrices");
        ctx.bank = std::make_shared<FilterBank>(make_filter_bank(*ctx.mesh, family));
    }
    if (spec.level < 0 || spec.level > ctx.mesh->max_level())
        throw std::invalid_argument("format level out of range for this mesh");
    return ctx;
}

int cmd_mesh_build(int levels, const std::string& out) {
    const SubdivisionMesh mesh = build_mesh(levels);
    export_mesh(mesh, out);
    std::cout << "mesh: wrote levels 0.." << mesh.max_level() << " under " << out << "\n";
    return 0;
}

int cmd_filters_gen(const std::string& family, const std::string& mesh_dir,
                    const std::string& out) {
    const SubdivisionMesh mesh = mesh_dir.empty() ? build_mesh(2) : load_mesh(mesh_dir);
    const FilterBank bank = make_filter_bank(mesh, parse_family(family));
    save_filter_bank(bank, out);
    std::cout << "filters: " << family << " bank for levels 1.." << bank.max_level()
              << " under " << out << "\n";
    return 0;
}

int cmd_filters_opt(const std::string& mesh_dir, const std::string& config_path,
                    const std::string& out, std::uint64_t seed) {
    const SubdivisionMesh mesh = mesh_dir.empty() ? build_mesh(2) : load_mesh(mesh_dir);
    WaveletOptOptions opt;
    if (!config_path.empty()) opt = load_config(config_path).wavelet_opt();
    opt.seed = resolve_seed(seed ? seed : opt.seed);
    WaveletOptReport report;
    const FilterBank bank = optimized_filter_bank(mesh, mesh.max_level(), opt, &report);
    save_filter_bank(bank, out);

    std::filesystem::create_directories(out);
    std::ofstream run(out + "/optimization_report.csv");
    run << "level,free_parameters,independent_constraints,cost_init,cost_final,ap_residual\n";
    std::ofstream traj(out + "/cost_trajectory.csv");
    traj << "level,outer_iteration,cost\n";
    bool all_converged = true;
    for (const auto& lr : report.levels) {
        run << lr.level << "," << lr.free_parameters << "," << lr.independent_constraints << ","
            << io::format_real(lr.cost_init) << "," << io::format_real(lr.cost_final) << ","
            << io::format_real(lr.constraint_violation) << "\n";
        for (size_t it = 0; it < lr.cost_history.size(); ++it)
            traj << lr.level << "," << it << "," << io::format_real(lr.cost_history[it]) << "\n";
        all_converged = all_converged && lr.converged;
        std::cout << "filters opt: level " << lr.level << " cost " << lr.cost_init << " -> "
                  << lr.cost_final << " |AP-I| " << lr.constraint_violation << "\n";
    }
    if (!all_converged) {
        std::cerr << "filters opt: optimizer did not fully converge; best iterate written\n";
        return 2;
    }
    return 0;
}

int cmd_decoder_analytic(const std::string& layout_path, int order, const std::string& mode,
                         double regularization, const std::string& out) {
    const SpeakerLayout layout = io::load_layout(layout_path);
    const DecodeMode m = mode == "proj" ? DecodeMode::projection : DecodeMode::pseudoinverse;
    DecodingMatrix d = decode_analytic(layout, order, m, regularization);
    d.layout_name = layout_path;
    if (!out.empty()) io::save_decoding_matrix(d, out);
    std::cout << "decoder analytic: " << mode << " order " << order << " (" << d.gains.rows()
              << "x" << d.gains.cols() << ")" << (out.empty() ? "" : " -> " + out) << "\n";
    return 0;
}

int cmd_decoder_opt(const std::string& layout_path, const std::string& format,
                    const std::string& preset, const std::string& band, const std::string& out,
                    const std::string& mesh_dir, const std::string& filters_dir,
                    const std::string& config_path, std::uint64_t seed, bool no_pairing) {
    const SpeakerLayout layout = io::load_layout(layout_path);
    const FormatSpec spec = FormatSpec::parse(format);

    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);

    std::unique_ptr<FormatEncoder> encoder;
    SwfContext ctx;
    if (spec.kind == FormatSpec::Kind::ambisonics) {
        encoder = std::make_unique<FormatEncoder>(spec.order);
    } else {
        ctx = make_swf_context(spec, mesh_dir, filters_dir, cfg.mesh_levels());
        encoder = std::make_unique<FormatEncoder>(ctx.mesh, ctx.bank, spec.level);
    }

    DecoderOptOptions opt;
    opt.seed = resolve_seed(seed);
    opt.lr_pairing = !no_pairing;
    opt.minimize = cfg.optimizer(opt.minimize);

    auto run_one = [&](Band b, const CostWeights& w, const std::string& path) {
        DecoderOptReport report;
        DecodingMatrix d = optimize_decoder(layout, *encoder, w, b, opt, &report);
        d.layout_name = layout_path;
        io::save_decoding_matrix(d, path);
        std::cout << "decoder opt: band " << band_name(b) << " f " << report.f_init << " -> "
                  << report.f_final << " -> " << path << "\n";
        return report.converged;
    };

    bool ok = true;
    if (band == "both") {
        const CostWeights lfw = cfg.weights("lf");
        const CostWeights hfw = cfg.weights(preset.empty() ? "hf" : preset);
        const std::string stem = out.find(".csv") != std::string::npos
                                     ? out.substr(0, out.size() - 4)
                                     : out;
        ok = run_one(Band::lf, lfw, stem + "_lf.csv") && ok;
        ok = run_one(Band::hf, hfw, stem + "_hf.csv") && ok;
    } else {
        const Band b = parse_band(band.empty() ? "universal" : band);
        const CostWeights w = cfg.weights(preset.empty() ? "smooth" : preset);
        ok = run_one(b, w, out);
    }
    if (!ok) {
        std::cerr << "decoder opt: optimizer stopped before reaching tolerance; "
                     "best iterate written\n";
        return 2;
    }
    return 0;
}

int cmd_eval_sweep(const std::string& plane, int n, const std::string& format,
                   const std::string& matrix_path, const std::string& layout_path,
                   const std::string& mesh_dir, const std::string& filters_dir, int up_level,
                   const std::string& out) {
    const SweepPlane p = plane == "vertical" ? SweepPlane::vertical : SweepPlane::horizontal;

    std::unique_ptr<FormatEncoder> encoder;
    SwfContext ctx;
    SpeakerLayout layout;
    DecodingMatrix d;
    Pipeline pipeline;

    if (!matrix_path.empty()) {
        d = io::load_decoding_matrix(matrix_path);
        if (layout_path.empty())
            throw std::invalid_argument("eval sweep: --matrix needs --layout");
        layout = io::load_layout(layout_path);
        if (d.format.kind == FormatSpec::Kind::ambisonics) {
            encoder = std::make_unique<FormatEncoder>(d.format.order);
        } else {
            ctx = make_swf_context(d.format, mesh_dir, filters_dir, 2);
            encoder = std::make_unique<FormatEncoder>(ctx.mesh, ctx.bank, d.format.level);
        }
        pipeline = make_decoder_pipeline(layout, *encoder, d);
    } else {
        const FormatSpec spec = FormatSpec::parse(format);
        if (spec.kind != FormatSpec::Kind::swf)
            throw std::invalid_argument("eval sweep without a decoder needs an swf format");
        ctx = make_swf_context(spec, mesh_dir, filters_dir, 2);
        pipeline = make_mesh_pipeline(*ctx.mesh, *ctx.bank, spec.level,
                                      up_level >= 0 ? std::optional<int>(up_level) : std::nullopt);
    }

    const SweepReport report = sweep(pipeline, p, n);
    save_sweep_csv(report, out);
    const auto summary = summarize(report);
    const std::string summary_path =
        out.find(".csv") != std::string::npos ? out.substr(0, out.size() - 4) + "_summary.csv"
                                              : out + "_summary.csv";
    save_summary_csv(summary, summary_path);
    for (const auto& row : summary)
        std::cout << "sweep " << row.observable << ": avg " << row.avg << " max " << row.max
                  << " min " << row.min << "\n";
    return 0;
}

int cmd_eval_crosstalk(const std::string& matrix_path, const std::string& layout_path,
                       const std::string& mesh_dir, const std::string& filters_dir,
                       const std::string& out) {
    const DecodingMatrix d = io::load_decoding_matrix(matrix_path);
    const SpeakerLayout layout = io::load_layout(layout_path);
    std::unique_ptr<FormatEncoder> encoder;
    SwfContext ctx;
    if (d.format.kind == FormatSpec::Kind::ambisonics) {
        encoder = std::make_unique<FormatEncoder>(d.format.order);
    } else {
        ctx = make_swf_context(d.format, mesh_dir, filters_dir, 2);
        encoder = std::make_unique<FormatEncoder>(ctx.mesh, ctx.bank, d.format.level);
    }
    const Eigen::VectorXd db = crosstalk(d, *encoder, layout);
    save_crosstalk_csv(layout, db, out);
    for (int i = 0; i < layout.size(); ++i)
        std::cout << "crosstalk " << layout.speakers[i].name << ": " << db[i] << " dB\n";
    return 0;
}

int cmd_apply(const std::string& matrix_path, const std::string& in_path,
              const std::string& out_path) {
    const DecodingMatrix d = io::load_decoding_matrix(matrix_path);
    const Eigen::MatrixXd frames = io::load_frames_csv(in_path);
    if (frames.cols() != d.gains.cols())
        throw std::invalid_argument("apply: frame channel count " + std::to_string(frames.cols()) +
                                    " does not match matrix columns " +
                                    std::to_string(d.gains.cols()));
    const Eigen::MatrixXd out = frames * d.gains.transpose();
    io::save_frames_csv(out, out_path);
    std::cout << "apply: " << frames.rows() << " frames, " << d.gains.cols() << " -> "
              << d.gains.rows() << " channels -> " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spherical wavelet + ambisonics toolchain"};
    app.require_subcommand(1);

    int exit_code = 0;
    std::function<int()> action;

    // mesh build
    auto* mesh_cmd = app.add_subcommand("mesh", "subdivision mesh operations");
    mesh_cmd->require_subcommand(1);
    {
        auto* build = mesh_cmd->add_subcommand("build", "build and export a mesh");
        auto levels = std::make_shared<int>(2);
        auto out = std::make_shared<std::string>("mesh");
        build->add_option("--levels", *levels, "number of subdivision iterations");
        build->add_option("--out", *out, "output directory")->required();
        build->callback([=, &action] { action = [=] { return cmd_mesh_build(*levels, *out); }; });
    }

    // filters gen / opt
    auto* filters_cmd = app.add_subcommand("filters", "wavelet filter banks");
    filters_cmd->require_subcommand(1);
    {
        auto* gen = filters_cmd->add_subcommand("gen", "closed-form filter families");
        auto family = std::make_shared<std::string>("vbap");
        auto mesh_dir = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        gen->add_option("--family", *family, "lazy|interpolating|sint|vbap")->required();
        gen->add_option("--mesh", *mesh_dir, "mesh directory (default: rebuilt 2-level mesh)");
        gen->add_option("--out", *out, "output directory")->required();
        gen->callback(
            [=, &action] { action = [=] { return cmd_filters_gen(*family, *mesh_dir, *out); }; });

        auto* opt = filters_cmd->add_subcommand("opt", "numerically optimized family");
        auto omesh = std::make_shared<std::string>();
        auto cfg = std::make_shared<std::string>();
        auto oout = std::make_shared<std::string>();
        auto seed = std::make_shared<std::uint64_t>(1234);
        opt->add_option("--mesh", *omesh, "mesh directory");
        opt->add_option("--config", *cfg, "run configuration file");
        opt->add_option("--out", *oout, "output directory")->required();
        opt->add_option("--seed", *seed, "random seed (SPHWAVE_SEED overrides)");
        opt->callback([=, &action] {
            action = [=] { return cmd_filters_opt(*omesh, *cfg, *oout, *seed); };
        });
    }

    // decoder analytic / opt
    auto* decoder_cmd = app.add_subcommand("decoder", "decoding matrices");
    decoder_cmd->require_subcommand(1);
    {
        auto* analytic = decoder_cmd->add_subcommand("analytic", "projection / pseudoinverse");
        auto layout = std::make_shared<std::string>();
        auto order = std::make_shared<int>(1);
        auto mode = std::make_shared<std::string>("proj");
        auto reg = std::make_shared<double>(0.0);
        auto out = std::make_shared<std::string>();
        analytic->add_option("--layout", *layout, "layout file")->required();
        analytic->add_option("--order", *order, "ambisonics order");
        analytic->add_option("--mode", *mode, "proj|pinv")
            ->check(CLI::IsMember({"proj", "pinv"}));
        analytic->add_option("--regularization", *reg, "Tikhonov term for pinv");
        analytic->add_option("--out", *out, "output matrix csv");
        analytic->callback([=, &action] {
            action = [=] { return cmd_decoder_analytic(*layout, *order, *mode, *reg, *out); };
        });

        auto* dopt = decoder_cmd->add_subcommand("opt", "psychoacoustic optimization");
        auto layout2 = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>();
        auto preset = std::make_shared<std::string>();
        auto band = std::make_shared<std::string>("universal");
        auto out2 = std::make_shared<std::string>();
        auto mesh_dir = std::make_shared<std::string>();
        auto filters_dir = std::make_shared<std::string>();
        auto cfg = std::make_shared<std::string>();
        auto seed = std::make_shared<std::uint64_t>(1234);
        auto no_pairing = std::make_shared<bool>(false);
        dopt->add_option("--layout", *layout2, "layout file")->required();
        dopt->add_option("--format", *format, "ambi:L or swf:FAMILY:LEVEL")->required();
        dopt->add_option("--preset", *preset, "weights preset (smooth|focus|lf|hf|custom)");
        dopt->add_option("--band", *band, "lf|hf|universal|both");
        dopt->add_option("--out", *out2, "output matrix csv")->required();
        dopt->add_option("--mesh", *mesh_dir, "mesh directory for swf formats");
        dopt->add_option("--filters", *filters_dir, "filter bank directory for swf formats");
        dopt->add_option("--config", *cfg, "run configuration file");
        dopt->add_option("--seed", *seed, "random seed (SPHWAVE_SEED overrides)");
        dopt->add_flag("--no-pairing", *no_pairing, "disable left/right row tying");
        dopt->callback([=, &action] {
            action = [=] {
                return cmd_decoder_opt(*layout2, *format, *preset, *band, *out2, *mesh_dir,
                                       *filters_dir, *cfg, *seed, *no_pairing);
            };
        });
    }

    // eval sweep / crosstalk
    auto* eval_cmd = app.add_subcommand("eval", "observable reports");
    eval_cmd->require_subcommand(1);
    {
        auto* sw = eval_cmd->add_subcommand("sweep", "ring sweep of the observables");
        auto plane = std::make_shared<std::string>("horizontal");
        auto n = std::make_shared<int>(360);
        auto format = std::make_shared<std::string>();
        auto matrix = std::make_shared<std::string>();
        auto layout = std::make_shared<std::string>();
        auto mesh_dir = std::make_shared<std::string>();
        auto filters_dir = std::make_shared<std::string>();
        auto up_level = std::make_shared<int>(-1);
        auto out = std::make_shared<std::string>("sweep.csv");
        sw->add_option("--plane", *plane, "horizontal|vertical")
            ->check(CLI::IsMember({"horizontal", "vertical"}));
        sw->add_option("--n", *n, "number of directions");
        sw->add_option("--format", *format, "swf:FAMILY:LEVEL for mesh-as-speakers sweeps");
        sw->add_option("--matrix", *matrix, "decoder matrix csv");
        sw->add_option("--layout", *layout, "layout file (with --matrix)");
        sw->add_option("--mesh", *mesh_dir, "mesh directory");
        sw->add_option("--filters", *filters_dir, "filter bank directory");
        sw->add_option("--up-level", *up_level, "upsample the truncated signal to this level");
        sw->add_option("--out", *out, "output csv")->required();
        sw->callback([=, &action] {
            action = [=] {
                return cmd_eval_sweep(*plane, *n, *format, *matrix, *layout, *mesh_dir,
                                      *filters_dir, *up_level, *out);
            };
        });

        auto* xt = eval_cmd->add_subcommand("crosstalk", "per-speaker crosstalk");
        auto matrix2 = std::make_shared<std::string>();
        auto layout2 = std::make_shared<std::string>();
        auto mesh_dir2 = std::make_shared<std::string>();
        auto filters_dir2 = std::make_shared<std::string>();
        auto out2 = std::make_shared<std::string>("crosstalk.csv");
        xt->add_option("--matrix", *matrix2, "decoder matrix csv")->required();
        xt->add_option("--layout", *layout2, "layout file")->required();
        xt->add_option("--mesh", *mesh_dir2, "mesh directory");
        xt->add_option("--filters", *filters_dir2, "filter bank directory");
        xt->add_option("--out", *out2, "output csv")->required();
        xt->callback([=, &action] {
            action = [=] {
                return cmd_eval_crosstalk(*matrix2, *layout2, *mesh_dir2, *filters_dir2, *out2);
            };
        });
    }

    // apply
    {
        auto* ap = app.add_subcommand("apply", "multiply sample frames by a matrix");
        auto matrix = std::make_shared<std::string>();
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        ap->add_option("--matrix", *matrix, "matrix csv")->required();
        ap->add_option("--in", *in, "input frames csv")->required();
        ap->add_option("--out", *out, "output frames csv")->required();
        ap->callback(
            [=, &action] { action = [=] { return cmd_apply(*matrix, *in, *out); }; });
    }

    try {
        app.parse(argc, argv);
        if (action) exit_code = action();
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::runtime_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
