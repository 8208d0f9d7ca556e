#include "actipipe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace actipipe::eval {

namespace {

bool movement(ActivityLabel l) { return l != ActivityLabel::Rest; }

std::string format_fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

std::string opt_hz(const std::optional<double>& v, const char* missing) {
    return v ? format_fixed2(*v) : std::string(missing);
}

std::string percent(const std::optional<double>& v) {
    return v ? format_fixed2(*v * 100.0) + " %" : std::string("undefined");
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void fold_fm(ActivityStats& st, double fm) {
    st.fm_min_hz = st.fm_min_hz ? std::min(*st.fm_min_hz, fm) : fm;
    st.fm_max_hz = st.fm_max_hz ? std::max(*st.fm_max_hz, fm) : fm;
}

void finish(EvalReport& r) {
    std::size_t trace = 0;
    for (std::size_t i = 0; i < kLabelCount; ++i) trace += r.confusion[i][i];
    if (r.scored_windows > 0) {
        r.accuracy = static_cast<double>(trace) / static_cast<double>(r.scored_windows);
        r.rest_vs_movement_accuracy = static_cast<double>(r.rest_movement_windows_correct) /
                                      static_cast<double>(r.scored_windows);
    } else {
        r.accuracy.reset();
        r.rest_vs_movement_accuracy.reset();
    }
}

}  // namespace

std::optional<double> EvalReport::detection_rate(ActivityLabel l) const {
    const auto& st = stats(l);
    if (st.n_t == 0) return std::nullopt;
    return static_cast<double>(st.d_t) / static_cast<double>(st.n_t);
}

std::optional<double> EvalReport::walk_run_detection_rate() const {
    const std::size_t n = stats(ActivityLabel::Walk).n_t + stats(ActivityLabel::Run).n_t;
    if (n == 0) return std::nullopt;
    const std::size_t d = stats(ActivityLabel::Walk).d_t + stats(ActivityLabel::Run).d_t;
    return static_cast<double>(d) / static_cast<double>(n);
}

EvalReport evaluate(std::span<const classifier::Decision> decisions,
                    std::span<const synth::Annotation> annotations, const EvalOptions& opts) {
    EvalReport r;
    if (decisions.empty()) return r;

    std::uint32_t d_lo = UINT32_MAX, d_hi = 0, a_lo = UINT32_MAX, a_hi = 0;
    for (const auto& d : decisions) {
        d_lo = std::min(d_lo, d.window_start_ms);
        d_hi = std::max(d_hi, d.window_start_ms + opts.window_ms);
    }
    for (const auto& a : annotations) {
        a_lo = std::min(a_lo, a.start_ms);
        a_hi = std::max(a_hi, a.end_ms);
    }
    if (annotations.empty() || d_hi <= a_lo || a_hi <= d_lo) {
        throw EvalError("decision windows and annotation intervals do not overlap");
    }

    struct SegmentTally {
        std::array<std::size_t, kLabelCount> votes{};
        std::size_t binary_correct = 0;
        std::size_t windows = 0;
        std::vector<double> fm;
    };
    std::vector<SegmentTally> tally(annotations.size());

    // Sorted view so warm-up exclusion does not depend on decision order.
    std::vector<const classifier::Decision*> ordered;
    ordered.reserve(decisions.size());
    for (const auto& d : decisions) ordered.push_back(&d);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto* a, const auto* b) { return a->window_start_ms < b->window_start_ms; });

    for (const auto* d : ordered) {
        const std::uint32_t w0 = d->window_start_ms;
        const std::uint32_t w1 = w0 + opts.window_ms;
        std::optional<std::size_t> seg;
        for (std::size_t i = 0; i < annotations.size(); ++i) {
            if (w0 >= annotations[i].start_ms && w1 <= annotations[i].end_ms) {
                seg = i;
                break;
            }
        }
        if (!seg) {
            ++r.dropped_windows;
            continue;
        }
        const auto& ann = annotations[*seg];
        const std::size_t ordinal = (w0 - ann.start_ms) / opts.window_ms;
        if (ordinal < opts.warmup_windows) {
            ++r.warmup_windows;
            continue;
        }
        ++r.scored_windows;
        ++r.confusion[classifier::index(ann.label)][classifier::index(d->label)];
        const bool binary_ok = movement(ann.label) == movement(d->label);
        if (binary_ok) ++r.rest_movement_windows_correct;

        auto& t = tally[*seg];
        ++t.votes[classifier::index(d->label)];
        ++t.windows;
        if (binary_ok) ++t.binary_correct;
        if (d->fm_hz) t.fm.push_back(*d->fm_hz);
    }

    for (std::size_t i = 0; i < annotations.size(); ++i) {
        const auto& t = tally[i];
        if (t.windows == 0) continue;
        const ActivityLabel truth = annotations[i].label;
        if (truth == ActivityLabel::Unknown) continue;
        auto& st = r.stats(truth);
        ++st.n_t;
        const std::size_t mine = t.votes[classifier::index(truth)];
        bool strict_majority = true;
        for (std::size_t l = 0; l < kLabelCount; ++l) {
            if (l != classifier::index(truth) && t.votes[l] >= mine) strict_majority = false;
        }
        if (strict_majority) ++st.d_t;
        if (!t.fm.empty()) fold_fm(st, median_of(t.fm));

        ++r.rest_movement_segments;
        if (2 * t.binary_correct > t.windows) ++r.rest_movement_segments_correct;
    }
    finish(r);
    return r;
}

std::vector<classifier::LabeledFeature> label_features(std::span<const features::FeatureVector> feats,
                                                       std::span<const synth::Annotation> annotations,
                                                       const EvalOptions& opts) {
    std::vector<classifier::LabeledFeature> out;
    out.reserve(feats.size());
    for (const auto& f : feats) {
        if (f.partial) continue;
        const std::uint32_t w0 = f.window_start_ms;
        const std::uint32_t w1 = w0 + opts.window_ms;
        for (const auto& a : annotations) {
            if (w0 >= a.start_ms && w1 <= a.end_ms) {
                if ((w0 - a.start_ms) / opts.window_ms >= opts.warmup_windows) out.push_back({f, a.label});
                break;
            }
        }
    }
    return out;
}

EvalReport merge(std::span<const EvalReport> reports) {
    EvalReport m;
    for (const auto& r : reports) {
        for (std::size_t i = 0; i < kLabelCount; ++i)
            for (std::size_t j = 0; j < kLabelCount; ++j) m.confusion[i][j] += r.confusion[i][j];
        m.scored_windows += r.scored_windows;
        m.dropped_windows += r.dropped_windows;
        m.warmup_windows += r.warmup_windows;
        m.rest_movement_windows_correct += r.rest_movement_windows_correct;
        m.rest_movement_segments += r.rest_movement_segments;
        m.rest_movement_segments_correct += r.rest_movement_segments_correct;
        for (std::size_t a = 0; a < m.activity.size(); ++a) {
            auto& dst = m.activity[a];
            const auto& src = r.activity[a];
            dst.n_t += src.n_t;
            dst.d_t += src.d_t;
            if (src.fm_min_hz) fold_fm(dst, *src.fm_min_hz);
            if (src.fm_max_hz) fold_fm(dst, *src.fm_max_hz);
        }
    }
    finish(m);
    return m;
}

ReportTable report_table(const EvalReport& report) {
    const auto& walk = report.stats(ActivityLabel::Walk);
    const auto& run = report.stats(ActivityLabel::Run);
    const auto& rest = report.stats(ActivityLabel::Rest);

    std::ostringstream text;
    text << "Walking & running classification\n"
         << "Activity\tN_t\tD_t\tf_m Min (Hz)\tf_m Max (Hz)\n"
         << "Walk\t" << walk.n_t << '\t' << walk.d_t << '\t' << opt_hz(walk.fm_min_hz, "-") << '\t'
         << opt_hz(walk.fm_max_hz, "-") << '\n'
         << "Run\t" << run.n_t << '\t' << run.d_t << '\t' << opt_hz(run.fm_min_hz, "-") << '\t'
         << opt_hz(run.fm_max_hz, "-") << '\n'
         << "Walk+Run\t" << walk.n_t + run.n_t << '\t' << walk.d_t + run.d_t << "\t-\t-\n"
         << '\n'
         << "Walk+Run detection rate: " << percent(report.walk_run_detection_rate()) << '\n'
         << "Rest segments: " << rest.n_t << " detected " << rest.d_t << '\n'
         << "Rest vs movement (windows): " << percent(report.rest_vs_movement_accuracy) << '\n'
         << "Rest vs movement (segments): " << report.rest_movement_segments_correct << '/'
         << report.rest_movement_segments << '\n'
         << "Window accuracy: " << percent(report.accuracy) << '\n'
         << "Scored windows: " << report.scored_windows << " (dropped " << report.dropped_windows
         << ", warm-up " << report.warmup_windows << ")\n";

    std::ostringstream csv;
    csv << "activity,n_t,d_t,fm_min_hz,fm_max_hz\n";
    auto row = [&](const char* name, const ActivityStats& st) {
        csv << name << ',' << st.n_t << ',' << st.d_t << ',' << opt_hz(st.fm_min_hz, "") << ','
            << opt_hz(st.fm_max_hz, "") << '\n';
    };
    row("Rest", rest);
    row("Walk", walk);
    row("Run", run);
    csv << "Walk+Run," << walk.n_t + run.n_t << ',' << walk.d_t + run.d_t << ",,\n";
    return {text.str(), csv.str()};
}

}  // namespace actipipe::eval
