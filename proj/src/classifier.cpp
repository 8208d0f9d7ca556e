#include "actipipe/classifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace actipipe::classifier {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2 == 1) return *mid;
    const double hi = *mid;
    const double lo = *std::max_element(v.begin(), mid);
    return 0.5 * (lo + hi);
}

bool is_movement(ActivityLabel l) { return l == ActivityLabel::Walk || l == ActivityLabel::Run; }

struct Th1Choice {
    double th1 = 0.0;
    double margin = 0.0;
};

// Exhaustive over every split point between consecutive distinct SMA values.
Th1Choice choose_th1(std::span<const LabeledFeature> labeled) {
    struct Pt {
        double sma;
        bool rest;
    };
    std::vector<Pt> pts;
    double rest_max = -std::numeric_limits<double>::infinity();
    double move_min = std::numeric_limits<double>::infinity();
    for (const auto& lf : labeled) {
        const bool rest = lf.truth == ActivityLabel::Rest;
        if (!rest && !is_movement(lf.truth)) continue;
        pts.push_back({lf.feature.sma_g, rest});
        if (rest) rest_max = std::max(rest_max, lf.feature.sma_g);
        else move_min = std::min(move_min, lf.feature.sma_g);
    }
    const double center = 0.5 * (rest_max + move_min);
    if (rest_max < move_min) return {center, 0.5 * (move_min - rest_max)};

    std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.sma < b.sma; });
    const std::size_t n = pts.size();
    std::size_t total_move = 0;
    for (const auto& p : pts) total_move += p.rest ? 0 : 1;

    // Threshold between pts[i-1] and pts[i]: rest below, movement at/above.
    Th1Choice best;
    std::size_t best_correct = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t rest_below = 0, move_below = 0;
    for (std::size_t i = 1; i < n; ++i) {
        (pts[i - 1].rest ? rest_below : move_below) += 1;
        if (pts[i].sma == pts[i - 1].sma) continue;
        const double th = 0.5 * (pts[i - 1].sma + pts[i].sma);
        if (th <= 0.0) continue;
        const std::size_t correct = rest_below + (total_move - move_below);
        const double margin = 0.5 * (pts[i].sma - pts[i - 1].sma);
        const double dist = std::abs(th - center);
        const bool better = correct > best_correct ||
                            (correct == best_correct &&
                             (margin > best.margin || (margin == best.margin && dist < best_dist)));
        if (better) {
            best = {th, margin};
            best_correct = correct;
            best_dist = dist;
        }
    }
    return best;
}

}  // namespace

const char* to_string(ActivityLabel l) {
    switch (l) {
        case ActivityLabel::Rest: return "Rest";
        case ActivityLabel::Walk: return "Walk";
        case ActivityLabel::Run: return "Run";
        case ActivityLabel::Unknown: return "Unknown";
    }
    return "Unknown";
}

ActivityLabel parse_label(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "rest") return ActivityLabel::Rest;
    if (lower == "walk") return ActivityLabel::Walk;
    if (lower == "run") return ActivityLabel::Run;
    if (lower == "unknown") return ActivityLabel::Unknown;
    throw std::invalid_argument("unknown activity label '" + std::string(s) + "'");
}

const char* to_string(ClassifierErrorKind kind) {
    switch (kind) {
        case ClassifierErrorKind::InvalidConfig: return "InvalidConfig";
        case ClassifierErrorKind::MissingClass: return "MissingClass";
    }
    return "Unknown";
}

void ClassifierConfig::validate(double fs_hz) const {
    auto fail = [](const std::string& why) {
        throw ClassifierError(ClassifierErrorKind::InvalidConfig, why);
    };
    if (!(th1_sma_g > 0.0)) fail("th1_sma_g must be > 0");
    if (!(th1_sma_g < th2_sma_g)) fail("th1_sma_g must be < th2_sma_g");
    if (!(ambiguity_fraction >= 0.0 && ambiguity_fraction < 1.0))
        fail("ambiguity_fraction must lie in [0, 1)");
    if (!(fm_threshold_hz > 0.0 && fm_threshold_hz < fs_hz / 2.0))
        fail("fm_threshold_hz must lie in (0, fs/2)");
    if (!(window_s > 0.0)) fail("window_s must be > 0");
}

ActivityLabel decide(double sma_g, std::optional<double> fm_hz, const ClassifierConfig& cfg) {
    if (sma_g < cfg.th1_sma_g) return ActivityLabel::Rest;
    if (sma_g > cfg.band_high()) return ActivityLabel::Run;
    if (sma_g < cfg.band_low()) return ActivityLabel::Walk;
    if (!fm_hz) return ActivityLabel::Unknown;
    return *fm_hz >= cfg.fm_threshold_hz ? ActivityLabel::Run : ActivityLabel::Walk;
}

ActivityLabel classify_window(const features::FeatureVector& f, const ClassifierConfig& cfg) {
    cfg.validate();
    return decide(f.sma_g, f.fm_hz, cfg);
}

std::vector<Decision> stream_classify(std::span<const features::FeatureVector> feats,
                                      const ClassifierConfig& cfg) {
    cfg.validate();
    std::vector<Decision> out;
    out.reserve(feats.size());
    for (const auto& f : feats) out.push_back({f.window_start_ms, decide(f.sma_g, f.fm_hz, cfg), f.fm_hz});
    return out;
}

FitResult fit_thresholds_detailed(std::span<const LabeledFeature> labeled, const FitGrid& grid) {
    std::size_t counts[kLabelCount] = {};
    for (const auto& lf : labeled) ++counts[index(lf.truth)];
    for (auto l : {ActivityLabel::Rest, ActivityLabel::Walk, ActivityLabel::Run}) {
        if (counts[index(l)] == 0) {
            throw ClassifierError(ClassifierErrorKind::MissingClass,
                                  std::string("no training examples labeled ") + to_string(l));
        }
    }

    const Th1Choice th1 = choose_th1(labeled);

    // Only movement windows at or above th1 depend on (th2, delta, fm).
    struct Pt {
        double sma;
        std::optional<double> fm;
        bool run;
    };
    std::vector<Pt> pts;
    std::vector<double> walk_sma, run_sma, walk_fm, run_fm;
    for (const auto& lf : labeled) {
        if (!is_movement(lf.truth)) continue;
        const bool run = lf.truth == ActivityLabel::Run;
        (run ? run_sma : walk_sma).push_back(lf.feature.sma_g);
        if (lf.feature.fm_hz) (run ? run_fm : walk_fm).push_back(*lf.feature.fm_hz);
        if (lf.feature.sma_g >= th1.th1) pts.push_back({lf.feature.sma_g, lf.feature.fm_hz, run});
    }
    std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.sma < b.sma; });
    const std::size_t n = pts.size();

    const double sma_center = 0.5 * (median_of(walk_sma) + median_of(run_sma));
    const double fm_center = walk_fm.empty() || run_fm.empty()
                                 ? grid.fs_hz / 4.0
                                 : 0.5 * (median_of(walk_fm) + median_of(run_fm));

    std::vector<double> sorted_sma(n);
    std::vector<std::size_t> walk_prefix(n + 1, 0), run_prefix(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        sorted_sma[i] = pts[i].sma;
        walk_prefix[i + 1] = walk_prefix[i] + (pts[i].run ? 0 : 1);
        run_prefix[i + 1] = run_prefix[i] + (pts[i].run ? 1 : 0);
    }

    // th2 grid spans the movement SMA range above th1.
    const double sma_lo = n ? std::max(sorted_sma.front(), th1.th1) : th1.th1;
    const double sma_hi = n ? sorted_sma.back() : th1.th1 * 2.0;
    std::vector<double> th2_grid;
    for (std::size_t i = 1; i <= grid.th2_steps; ++i) {
        const double t = sma_lo + (sma_hi - sma_lo) * static_cast<double>(i) /
                                      static_cast<double>(grid.th2_steps + 1);
        if (t > th1.th1) th2_grid.push_back(t);
    }
    if (th2_grid.empty()) th2_grid.push_back(std::max(sma_hi, th1.th1 * 1.5));

    double fm_lo = std::numeric_limits<double>::infinity(), fm_hi = -fm_lo;
    for (const auto& p : pts) {
        if (!p.fm) continue;
        fm_lo = std::min(fm_lo, *p.fm);
        fm_hi = std::max(fm_hi, *p.fm);
    }
    std::vector<double> fm_grid;
    if (fm_lo <= fm_hi) {
        for (std::size_t i = 1; i <= grid.fm_steps; ++i) {
            fm_grid.push_back(fm_lo + (fm_hi - fm_lo) * static_cast<double>(i) /
                                          static_cast<double>(grid.fm_steps + 1));
        }
    }
    fm_grid.push_back(fm_center);
    std::erase_if(fm_grid, [&](double t) { return !(t > 0.0 && t < grid.fs_hz / 2.0); });
    if (fm_grid.empty()) fm_grid.push_back(grid.fs_hz / 4.0);

    std::vector<double> delta_grid;
    for (double d = 0.0; d <= grid.delta_max + 1e-12 && d < 1.0; d += grid.delta_step)
        delta_grid.push_back(d);

    struct Best {
        std::size_t correct = 0;
        double delta = 0, th2 = 0, fm = 0;
        double th2_dist = 0, fm_dist = 0;
        bool set = false;
    } best;

    std::vector<std::size_t> band_prefix(n + 1, 0);
    for (double fm_t : fm_grid) {
        for (std::size_t i = 0; i < n; ++i) {
            const bool ok = pts[i].fm && ((*pts[i].fm >= fm_t) == pts[i].run);
            band_prefix[i + 1] = band_prefix[i] + (ok ? 1 : 0);
        }
        const double fm_dist = std::abs(fm_t - fm_center);
        for (double delta : delta_grid) {
            for (double th2 : th2_grid) {
                const double lo = th2 * (1.0 - delta);
                const double hi = th2 * (1.0 + delta);
                const auto i_lo = static_cast<std::size_t>(
                    std::lower_bound(sorted_sma.begin(), sorted_sma.end(), lo) - sorted_sma.begin());
                const auto i_hi = static_cast<std::size_t>(
                    std::upper_bound(sorted_sma.begin(), sorted_sma.end(), hi) - sorted_sma.begin());
                const std::size_t correct = walk_prefix[i_lo] + (band_prefix[i_hi] - band_prefix[i_lo]) +
                                            (run_prefix[n] - run_prefix[i_hi]);
                const double th2_dist = std::abs(th2 - sma_center);
                bool better = !best.set || correct > best.correct;
                if (!better && correct == best.correct) {
                    if (delta < best.delta - 1e-12) better = true;
                    else if (std::abs(delta - best.delta) <= 1e-12) {
                        if (th2_dist < best.th2_dist) better = true;
                        else if (th2_dist == best.th2_dist && fm_dist < best.fm_dist) better = true;
                    }
                }
                if (better) best = {correct, delta, th2, fm_t, th2_dist, fm_dist, true};
            }
        }
    }

    FitResult r;
    r.config.th1_sma_g = th1.th1;
    r.config.th2_sma_g = best.th2;
    r.config.ambiguity_fraction = best.delta;
    r.config.fm_threshold_hz = best.fm;
    r.config.window_s = 1.0;
    r.rest_margin_g = th1.margin;

    std::size_t correct = 0;
    for (const auto& lf : labeled) {
        if (decide(lf.feature.sma_g, lf.feature.fm_hz, r.config) == lf.truth) ++correct;
    }
    r.training_accuracy = labeled.empty() ? 0.0
                                          : static_cast<double>(correct) / static_cast<double>(labeled.size());
    return r;
}

ClassifierConfig fit_thresholds(std::span<const LabeledFeature> labeled, const FitGrid& grid) {
    return fit_thresholds_detailed(labeled, grid).config;
}

void write_decisions_csv(std::ostream& out, std::span<const Decision> decisions) {
    out << "window_start_ms,label\n";
    for (const auto& d : decisions) out << d.window_start_ms << ',' << to_string(d.label) << '\n';
}

std::vector<Decision> read_decisions_csv(std::istream& in) {
    std::vector<Decision> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (line_no == 1 && line.rfind("window_start_ms", 0) == 0)) continue;
        const auto comma = line.find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("missing label");
            Decision d;
            d.window_start_ms = static_cast<std::uint32_t>(std::stoul(line.substr(0, comma)));
            d.label = parse_label(line.substr(comma + 1));
            out.push_back(d);
        } catch (const std::exception&) {
            throw Error("classifier", "UnparsableRow", "labels line " + std::to_string(line_no) + ": cannot parse '" + line + "'");
        }
    }
    return out;
}

std::string config_to_json(const ClassifierConfig& cfg, const std::string& provenance) {
    nlohmann::ordered_json j;
    if (!provenance.empty()) j["_provenance"] = provenance;
    j["th1_sma_g"] = cfg.th1_sma_g;
    j["th2_sma_g"] = cfg.th2_sma_g;
    j["ambiguity_fraction"] = cfg.ambiguity_fraction;
    j["fm_threshold_hz"] = cfg.fm_threshold_hz;
    j["window_s"] = cfg.window_s;
    return j.dump(2) + "\n";
}

ClassifierConfig config_from_json(const std::string& text) {
    ClassifierConfig cfg;
    try {
        const auto j = nlohmann::json::parse(text);
        cfg.th1_sma_g = j.at("th1_sma_g").get<double>();
        cfg.th2_sma_g = j.at("th2_sma_g").get<double>();
        cfg.ambiguity_fraction = j.at("ambiguity_fraction").get<double>();
        cfg.fm_threshold_hz = j.at("fm_threshold_hz").get<double>();
        cfg.window_s = j.value("window_s", 1.0);
    } catch (const nlohmann::json::exception& e) {
        throw ClassifierError(ClassifierErrorKind::InvalidConfig, e.what());
    }
    cfg.validate();
    return cfg;
}

void save_config(const ClassifierConfig& cfg, const std::filesystem::path& path,
                 const std::string& provenance) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << config_to_json(cfg, provenance);
}

ClassifierConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ClassifierError(ClassifierErrorKind::InvalidConfig, "cannot open classifier config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

ClassifierConfig ClassifierConfig::defaults() {
    // Output of `actipipe fit --synthetic` on the bundled training corpus
    // (reference corpus, seeds 101-110, 6 warm-up windows skipped per segment).
    ClassifierConfig c;
    c.th1_sma_g = 0.13333566689596366;
    c.th2_sma_g = 0.66938573196857765;
    c.ambiguity_fraction = 0.0;
    c.fm_threshold_hz = 3.160327279121813;
    c.window_s = 1.0;
    return c;
}

}  // namespace actipipe::classifier
