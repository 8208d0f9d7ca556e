#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "actipipe/calibration.hpp"
#include "actipipe/classifier.hpp"
#include "actipipe/dsp.hpp"
#include "actipipe/eval.hpp"
#include "actipipe/features.hpp"
#include "actipipe/live.hpp"
#include "actipipe/pipeline.hpp"
#include "actipipe/synth.hpp"
#include "actipipe/wire.hpp"

namespace actipipe::cli {

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted = true; }

/// Bad flag combinations discovered after parsing; maps to exit 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::shared_ptr<spdlog::logger> logger() {
    static auto log = [] {
        auto l = spdlog::stderr_color_mt("actipipe");
        l->set_pattern("[%l] %v");
        const char* env = std::getenv("ACTIPIPE_LOG");
        l->set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
        return l;
    }();
    return log;
}

struct Common {
    double fs = 50.0;
    std::string cal;
    std::string config;
    std::string in;
    std::string out;
    std::string units = "mv";
    std::uint16_t port = 0;
    std::uint64_t seed = 1;
    bool csv = false;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    return f;
}

/// Writes to --out when given, else to `fallback`.
template <typename Fn>
void emit(const std::string& path, std::ostream& fallback, Fn&& fn) {
    if (path.empty()) {
        fn(fallback);
        return;
    }
    auto f = open_out(path);
    fn(f);
}

std::optional<calibration::CalibrationModel> load_cal_for(const Common& c, wire::Units units) {
    if (units == wire::Units::G) return std::nullopt;
    if (c.cal.empty()) throw UsageError("--cal is required for millivolt input (or pass --units g)");
    return calibration::load_model(c.cal);
}

classifier::ClassifierConfig load_classifier(const Common& c) {
    return c.config.empty() ? classifier::ClassifierConfig::defaults() : classifier::load_config(c.config);
}

wire::RawSampleStream load_samples(const Common& c) {
    if (c.in.empty()) throw UsageError("--in is required");
    const auto units = wire::parse_units(c.units);
    if (units == wire::Units::Millivolts && c.cal.empty())
        throw UsageError("--cal is required for millivolt input (or pass --units g)");
    auto result = wire::read_csv(c.in, units);
    logger()->info("read {} samples from {}", result.stream.samples.size(), c.in);
    return std::move(result.stream);
}

PipelineConfig pipeline_config(const Common& c, wire::Units units) {
    PipelineConfig cfg;
    cfg.fs_hz = c.fs;
    cfg.features.fs_hz = c.fs;
    cfg.features.window_samples = static_cast<std::size_t>(std::llround(c.fs));
    cfg.calibration = load_cal_for(c, units);
    return cfg;
}

std::vector<features::FeatureVector> read_features_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open features file " + path);
    return features::read_features_csv(in);
}

// ---- subcommands ---------------------------------------------------------

int cmd_gen(const Common& c, const std::string& protocol, bool packets, std::ostream& err) {
    if (c.out.empty()) throw UsageError("--out PREFIX is required");
    const auto steps = synth::parse_protocol(protocol);
    const auto session = synth::generate_session(steps, c.fs, c.seed);
    const auto model = c.cal.empty() ? calibration::CalibrationModel::nominal() : calibration::load_model(c.cal);
    const auto units = wire::parse_units(c.units);

    {
        auto f = open_out(c.out + ".csv");
        wire::write_csv(f, units == wire::Units::G ? synth::to_g_stream(session)
                                                    : synth::to_millivolt_stream(session, model));
    }
    {
        auto f = open_out(c.out + ".annotations.csv");
        synth::write_annotations(f, session.annotations);
    }
    auto [up, inv] = synth::generate_calibration_postures(model, 5.0, c.fs, 3.0, c.seed ^ 0xCA11u);
    {
        auto f = open_out(c.out + ".upright.csv");
        wire::write_csv(f, up);
    }
    {
        auto f = open_out(c.out + ".inverted.csv");
        wire::write_csv(f, inv);
    }
    if (packets) {
        std::ofstream f(c.out + ".bin", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + c.out + ".bin");
        wire::write_frames(f, synth::to_packets(session, model));
    }
    logger()->info("generated {} samples in {} segments", session.samples.size(), session.annotations.size());
    (void)err;
    return 0;
}

int cmd_calibrate(const Common& c, const std::string& upright, const std::string& inverted,
                  double stillness, std::ostream& out) {
    calibration::FitOptions opts;
    opts.fs_hz = c.fs;
    opts.stillness_gate_mv = stillness;
    const auto up = wire::read_csv(upright, wire::Units::Millivolts).stream;
    const auto inv = wire::read_csv(inverted, wire::Units::Millivolts).stream;
    const auto model = calibration::fit_calibration(up, inv, opts);
    emit(c.out, out, [&](std::ostream& o) { o << calibration::model_to_json(model); });
    return 0;
}

int cmd_decode(const Common& c, std::ostream& out) {
    if (c.in.empty()) throw UsageError("--in is required");
    const auto stream = wire::read_frames_file(c.in);
    emit(c.out, out, [&](std::ostream& o) { wire::write_csv(o, stream); });
    logger()->info("decoded {} samples; corrupt {}, duplicates {}, late {}, out of range {}",
                   stream.samples.size(), stream.stats.corrupt_frames, stream.stats.duplicates,
                   stream.stats.late_dropped, stream.stats.out_of_range);
    return 0;
}

int cmd_psd(const Common& c, bool raw, std::size_t segment, const std::string& axis_name,
            std::ostream& out) {
    const auto stream = load_samples(c);
    const std::size_t axis = axis_name == "x" ? kX : axis_name == "y" ? kY : kZ;
    std::vector<double> signal;
    signal.reserve(stream.samples.size());
    if (raw) {
        const auto model = load_cal_for(c, stream.units);
        for (const auto& s : stream.samples)
            signal.push_back(model ? calibration::apply_calibration(*model, s.axes)[axis] : s.axes[axis]);
    } else {
        for (const auto& s : preprocess(stream, c.fs, load_cal_for(c, stream.units))) signal.push_back(s.g[axis]);
    }
    dsp::WelchOptions opts;
    opts.segment_len = segment;
    const auto psd = dsp::welch_psd(signal, c.fs, opts);
    emit(c.out, out, [&](std::ostream& o) {
        o << "freq_hz,pxx\n";
        for (std::size_t k = 0; k < psd.pxx.size(); ++k)
            o << wire::format_double(psd.freqs_hz[k]) << ',' << wire::format_double(psd.pxx[k]) << '\n';
    });
    logger()->info("median frequency {:.3f} Hz, average power {:.6g}", dsp::median_frequency(psd),
                   dsp::average_power(psd));
    return 0;
}

int cmd_features(const Common& c, std::ostream& out) {
    const auto stream = load_samples(c);
    const auto result = run_pipeline(stream, pipeline_config(c, stream.units));
    emit(c.out, out, [&](std::ostream& o) { features::write_features_csv(o, result.features); });
    return 0;
}

int cmd_classify(const Common& c, bool from_features, std::ostream& out) {
    const auto cfg = load_classifier(c);
    std::vector<classifier::Decision> decisions;
    if (from_features) {
        if (c.in.empty()) throw UsageError("--in is required");
        decisions = classifier::stream_classify(read_features_file(c.in), cfg);
    } else {
        const auto stream = load_samples(c);
        auto pcfg = pipeline_config(c, stream.units);
        pcfg.classifier = cfg;
        decisions = run_pipeline(stream, pcfg).decisions;
    }
    emit(c.out, out, [&](std::ostream& o) { classifier::write_decisions_csv(o, decisions); });
    return 0;
}

int cmd_fit(const Common& c, const std::string& annotations, bool from_features, bool synthetic,
            std::size_t warmup, std::ostream& out) {
    std::vector<classifier::LabeledFeature> labeled;
    std::string provenance;
    const eval::EvalOptions eopts{static_cast<std::uint32_t>(1000), warmup};
    if (synthetic) {
        PipelineConfig pcfg;
        for (const auto& s : synth::build_corpus(synth::reference_corpus(c.seed))) {
            const auto r = run_pipeline(synth::to_g_stream(s), pcfg);
            const auto l = eval::label_features(r.features, s.annotations, eopts);
            labeled.insert(labeled.end(), l.begin(), l.end());
        }
        provenance = "fit_thresholds on the synthetic reference corpus (seeds " + std::to_string(c.seed) + "-" +
                     std::to_string(c.seed + 9) + ", " + std::to_string(warmup) +
                     " warm-up windows skipped per segment)";
    } else {
        if (annotations.empty()) throw UsageError("--annotations is required unless --synthetic");
        std::vector<features::FeatureVector> feats;
        if (from_features) {
            if (c.in.empty()) throw UsageError("--in is required");
            feats = read_features_file(c.in);
        } else {
            const auto stream = load_samples(c);
            feats = run_pipeline(stream, pipeline_config(c, stream.units)).features;
        }
        const auto ann = synth::read_annotations(annotations);
        labeled = eval::label_features(feats, ann, eopts);
        provenance = "fit_thresholds on " + c.in;
    }
    const auto result = classifier::fit_thresholds_detailed(labeled);
    logger()->info("training accuracy {:.4f} over {} windows", result.training_accuracy, labeled.size());
    emit(c.out, out, [&](std::ostream& o) { o << classifier::config_to_json(result.config, provenance); });
    return 0;
}

int cmd_eval(const Common& c, const std::string& annotations, const std::string& features_path,
             std::size_t warmup, std::ostream& out) {
    if (c.in.empty()) throw UsageError("--in is required");
    if (annotations.empty()) throw UsageError("--annotations is required");
    std::ifstream in(c.in);
    if (!in) throw std::runtime_error("cannot open labels file " + c.in);
    auto decisions = classifier::read_decisions_csv(in);
    if (!features_path.empty()) {
        const auto feats = read_features_file(features_path);
        std::map<std::uint32_t, double> fm;
        for (const auto& f : feats)
            if (f.fm_hz) fm[f.window_start_ms] = *f.fm_hz;
        for (auto& d : decisions)
            if (auto it = fm.find(d.window_start_ms); it != fm.end()) d.fm_hz = it->second;
    }
    const auto ann = synth::read_annotations(annotations);
    const auto report = eval::evaluate(decisions, ann, {1000, warmup});
    const auto table = eval::report_table(report);
    emit(c.out, out, [&](std::ostream& o) { o << (c.csv ? table.csv : table.text); });
    return 0;
}

int cmd_listen(const Common& c, std::size_t max_windows, std::ostream& out) {
    LiveOptions opts;
    opts.port = c.port;
    opts.pipeline = pipeline_config(c, wire::Units::Millivolts);
    opts.pipeline.classifier = load_classifier(c);
    opts.max_windows = max_windows;
    opts.stop = &g_interrupted;
    opts.on_ready = [](std::uint16_t port) { logger()->info("listening on udp port {}", port); };
    opts.on_decision = [&](std::uint16_t, const classifier::Decision& d) {
        out << d.window_start_ms << ',' << classifier::to_string(d.label) << '\n' << std::flush;
    };
    g_interrupted = false;
    auto previous = std::signal(SIGINT, on_sigint);
    LiveStats stats;
    try {
        stats = run_live(opts);
    } catch (...) {
        std::signal(SIGINT, previous);
        throw;
    }
    std::signal(SIGINT, previous);
    logger()->info("datagrams {}, corrupt {}, samples {}, decisions {}, queue high water {}", stats.datagrams,
                   stats.corrupt, stats.samples, stats.decisions, stats.queue_high_water);
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"actipipe: accelerometer activity classification pipeline"};
    app.require_subcommand(1);
    Common c;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--fs", c.fs, "Sample rate in Hz")->check(CLI::PositiveNumber);
        sub->add_option("--out", c.out, "Output path (stdout when omitted)");
    };
    auto add_input = [&](CLI::App* sub) {
        sub->add_option("--in", c.in, "Input path");
        sub->add_option("--units", c.units, "Input CSV units")->check(CLI::IsMember({"mv", "g"}));
        sub->add_option("--cal", c.cal, "Calibration model JSON");
    };

    std::string protocol = "default";
    bool packets = false;
    auto* gen = app.add_subcommand("gen", "Generate an annotated synthetic session");
    add_common(gen);
    gen->add_option("--protocol", protocol, "'default' or activity[@hz]:seconds,...");
    gen->add_option("--seed", c.seed);
    gen->add_option("--cal", c.cal, "Model used to convert g to mV (nominal when omitted)");
    gen->add_option("--units", c.units, "Session CSV units")->check(CLI::IsMember({"mv", "g"}));
    gen->add_flag("--packets", packets, "Also write PREFIX.bin as binary frames");

    std::string upright, inverted;
    double stillness = 15.0;
    auto* cal = app.add_subcommand("calibrate", "Fit a calibration model from posture windows");
    add_common(cal);
    cal->add_option("--upright", upright)->required();
    cal->add_option("--inverted", inverted)->required();
    cal->add_option("--stillness-mv", stillness);

    auto* dec = app.add_subcommand("decode", "Decode a binary frame file to CSV");
    add_common(dec);
    dec->add_option("--in", c.in);

    bool raw = false;
    std::size_t segment = 128;
    std::string axis = "z";
    auto* psd = app.add_subcommand("psd", "Welch PSD of one axis as freq_hz,pxx CSV");
    add_common(psd);
    add_input(psd);
    psd->add_flag("--raw", raw, "Skip moving-average and high-pass stages");
    psd->add_option("--segment", segment, "Welch segment length");
    psd->add_option("--axis", axis)->check(CLI::IsMember({"x", "y", "z"}));

    auto* feat = app.add_subcommand("features", "Per-second SMA and median frequency");
    add_common(feat);
    add_input(feat);

    bool from_features = false;
    auto* cls = app.add_subcommand("classify", "Label each decision window");
    add_common(cls);
    add_input(cls);
    cls->add_option("--config", c.config, "Classifier config JSON (built-in defaults when omitted)");
    cls->add_flag("--features", from_features, "Input is a features CSV");

    std::string annotations;
    bool synthetic = false;
    std::size_t warmup = 6;
    auto* fit = app.add_subcommand("fit", "Fit classifier thresholds");
    add_common(fit);
    add_input(fit);
    fit->add_option("--annotations", annotations);
    fit->add_flag("--features", from_features, "Input is a features CSV");
    fit->add_flag("--synthetic", synthetic, "Fit on the synthetic reference corpus starting at --seed");
    fit->add_option("--seed", c.seed);
    fit->add_option("--warmup", warmup, "Windows skipped at each segment start");

    std::string features_path;
    std::size_t eval_warmup = 0;
    auto* ev = app.add_subcommand("eval", "Score labels against annotations");
    add_common(ev);
    ev->add_option("--in", c.in, "Labels CSV");
    ev->add_option("--annotations", annotations);
    ev->add_option("--features", features_path, "Features CSV supplying f_m per window");
    ev->add_option("--warmup", eval_warmup, "Windows skipped at each segment start");
    ev->add_flag("--csv", c.csv, "Emit the CSV table");

    std::size_t max_windows = 0;
    auto* listen = app.add_subcommand("listen", "Classify frames arriving as UDP datagrams");
    listen->add_option("--fs", c.fs)->check(CLI::PositiveNumber);
    listen->add_option("--port", c.port)->required();
    listen->add_option("--cal", c.cal)->required();
    listen->add_option("--config", c.config);
    listen->add_option("--max-windows", max_windows, "Exit after this many decisions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*gen) return cmd_gen(c, protocol, packets, err);
        if (*cal) return cmd_calibrate(c, upright, inverted, stillness, out);
        if (*dec) return cmd_decode(c, out);
        if (*psd) return cmd_psd(c, raw, segment, axis, out);
        if (*feat) return cmd_features(c, out);
        if (*cls) return cmd_classify(c, from_features, out);
        if (*fit) return cmd_fit(c, annotations, from_features, synthetic, warmup, out);
        if (*ev) return cmd_eval(c, annotations, features_path, eval_warmup, out);
        if (*listen) return cmd_listen(c, max_windows, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace actipipe::cli
