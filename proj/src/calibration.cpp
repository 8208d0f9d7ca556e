#include "actipipe/calibration.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace actipipe::calibration {

namespace {

struct WindowStats {
    Vec3 mean{};
    Vec3 stddev{};
};

WindowStats window_stats(const wire::RawSampleStream& s) {
    WindowStats st;
    const double n = static_cast<double>(s.samples.size());
    for (const auto& smp : s.samples)
        for (std::size_t a = 0; a < 3; ++a) st.mean[a] += smp.axes[a];
    for (auto& m : st.mean) m /= n;
    for (const auto& smp : s.samples)
        for (std::size_t a = 0; a < 3; ++a) {
            const double d = smp.axes[a] - st.mean[a];
            st.stddev[a] += d * d;
        }
    for (auto& v : st.stddev) v = n > 1 ? std::sqrt(v / (n - 1)) : 0.0;
    return st;
}

void check_window(const wire::RawSampleStream& s, const char* name, const FitOptions& opts) {
    const auto needed = static_cast<std::size_t>(std::ceil(opts.min_duration_s * opts.fs_hz));
    if (s.samples.size() < needed || s.samples.size() < 2) {
        throw CalibrationError(CalibrationErrorKind::TooShort,
                               std::string(name) + " window has " +
                                   std::to_string(s.samples.size()) + " samples, need " +
                                   std::to_string(needed));
    }
    if (s.units != wire::Units::Millivolts) {
        throw CalibrationError(CalibrationErrorKind::InvalidModel,
                               std::string(name) + " window must be in millivolts");
    }
}

const char* kAxisNames[3] = {"x", "y", "z"};

}  // namespace

const char* to_string(CalibrationErrorKind kind) {
    switch (kind) {
        case CalibrationErrorKind::TooShort: return "TooShort";
        case CalibrationErrorKind::NotStill: return "NotStill";
        case CalibrationErrorKind::DegenerateFit: return "DegenerateFit";
        case CalibrationErrorKind::InvalidModel: return "InvalidModel";
    }
    return "Unknown";
}

CalibrationModel CalibrationModel::nominal() { return CalibrationModel{}; }

CalibrationModel fit_calibration(const wire::RawSampleStream& upright,
                                 const wire::RawSampleStream& inverted, const FitOptions& opts) {
    check_window(upright, "upright", opts);
    check_window(inverted, "inverted", opts);

    const WindowStats up = window_stats(upright);
    const WindowStats inv = window_stats(inverted);
    for (std::size_t a = 0; a < 3; ++a) {
        const double worst = std::max(up.stddev[a], inv.stddev[a]);
        if (worst > opts.stillness_gate_mv) {
            throw CalibrationError(CalibrationErrorKind::NotStill,
                                   std::string("axis ") + kAxisNames[a] + " std-dev " +
                                       std::to_string(worst) + " mV exceeds gate " +
                                       std::to_string(opts.stillness_gate_mv) + " mV");
        }
    }

    std::size_t gaxis = 0;
    for (std::size_t a = 1; a < 3; ++a) {
        if (std::abs(up.mean[a] - inv.mean[a]) > std::abs(up.mean[gaxis] - inv.mean[gaxis])) gaxis = a;
    }
    const double span = up.mean[gaxis] - inv.mean[gaxis];
    if (span < opts.degenerate_span_mv) {
        throw CalibrationError(CalibrationErrorKind::DegenerateFit,
                               "upright/inverted difference on axis " +
                                   std::string(kAxisNames[gaxis]) + " is " + std::to_string(span) +
                                   " mV");
    }
    const double scale = span / 2.0;

    CalibrationModel m;
    for (std::size_t a = 0; a < 3; ++a) {
        m.axes[a].offset_mv = (up.mean[a] + inv.mean[a]) / 2.0;
        m.axes[a].scale_mv_per_g = scale;
    }

    // RMS deviation from the model's prediction over both windows.
    for (std::size_t a = 0; a < 3; ++a) {
        const double up_pred = a == gaxis ? m.axes[a].offset_mv + scale : m.axes[a].offset_mv;
        const double inv_pred = a == gaxis ? m.axes[a].offset_mv - scale : m.axes[a].offset_mv;
        double ss = 0.0;
        for (const auto& s : upright.samples) ss += (s.axes[a] - up_pred) * (s.axes[a] - up_pred);
        for (const auto& s : inverted.samples) ss += (s.axes[a] - inv_pred) * (s.axes[a] - inv_pred);
        m.fit_residual_mv[a] =
            std::sqrt(ss / static_cast<double>(upright.samples.size() + inverted.samples.size()));
    }

    m.meta.upright_samples = upright.samples.size();
    m.meta.inverted_samples = inverted.samples.size();
    m.meta.upright_start_ms = upright.samples.front().timestamp_ms;
    m.meta.upright_end_ms = upright.samples.back().timestamp_ms;
    m.meta.inverted_start_ms = inverted.samples.front().timestamp_ms;
    m.meta.inverted_end_ms = inverted.samples.back().timestamp_ms;
    m.meta.gravity_axis = gaxis;
    return m;
}

Vec3 apply_calibration(const CalibrationModel& model, const Vec3& mv) {
    Vec3 g;
    for (std::size_t a = 0; a < 3; ++a)
        g[a] = (mv[a] - model.axes[a].offset_mv) / model.axes[a].scale_mv_per_g;
    return g;
}

Vec3 to_millivolts(const CalibrationModel& model, const Vec3& g) {
    Vec3 mv;
    for (std::size_t a = 0; a < 3; ++a)
        mv[a] = model.axes[a].offset_mv + g[a] * model.axes[a].scale_mv_per_g;
    return mv;
}

void validate(const CalibrationModel& model) {
    for (std::size_t a = 0; a < 3; ++a) {
        const auto& ax = model.axes[a];
        if (!(ax.scale_mv_per_g > 0.0) || !std::isfinite(ax.scale_mv_per_g)) {
            throw CalibrationError(CalibrationErrorKind::InvalidModel,
                                   std::string("axis ") + kAxisNames[a] + " scale must be > 0");
        }
        if (!(ax.offset_mv >= 0.0 && ax.offset_mv <= wire::kAdcMaxMv)) {
            throw CalibrationError(CalibrationErrorKind::InvalidModel,
                                   std::string("axis ") + kAxisNames[a] + " offset outside ADC range");
        }
        if (!(model.fit_residual_mv[a] >= 0.0) || !std::isfinite(model.fit_residual_mv[a])) {
            throw CalibrationError(CalibrationErrorKind::InvalidModel,
                                   std::string("axis ") + kAxisNames[a] + " residual invalid");
        }
    }
}

std::string model_to_json(const CalibrationModel& m) {
    nlohmann::json j;
    for (std::size_t a = 0; a < 3; ++a) {
        j["axes"][kAxisNames[a]] = {{"offset_mv", m.axes[a].offset_mv},
                                    {"scale_mv_per_g", m.axes[a].scale_mv_per_g},
                                    {"fit_residual_mv", m.fit_residual_mv[a]}};
    }
    j["fit"] = {{"upright_samples", m.meta.upright_samples},
                {"inverted_samples", m.meta.inverted_samples},
                {"upright_start_ms", m.meta.upright_start_ms},
                {"upright_end_ms", m.meta.upright_end_ms},
                {"inverted_start_ms", m.meta.inverted_start_ms},
                {"inverted_end_ms", m.meta.inverted_end_ms},
                {"gravity_axis", kAxisNames[m.meta.gravity_axis]}};
    return j.dump(2) + "\n";
}

CalibrationModel model_from_json(const std::string& text) {
    CalibrationModel m;
    try {
        const auto j = nlohmann::json::parse(text);
        for (std::size_t a = 0; a < 3; ++a) {
            const auto& ax = j.at("axes").at(kAxisNames[a]);
            m.axes[a].offset_mv = ax.at("offset_mv").get<double>();
            m.axes[a].scale_mv_per_g = ax.at("scale_mv_per_g").get<double>();
            m.fit_residual_mv[a] = ax.value("fit_residual_mv", 0.0);
        }
        if (j.contains("fit")) {
            const auto& f = j.at("fit");
            m.meta.upright_samples = f.value("upright_samples", std::size_t{0});
            m.meta.inverted_samples = f.value("inverted_samples", std::size_t{0});
            m.meta.upright_start_ms = f.value("upright_start_ms", 0u);
            m.meta.upright_end_ms = f.value("upright_end_ms", 0u);
            m.meta.inverted_start_ms = f.value("inverted_start_ms", 0u);
            m.meta.inverted_end_ms = f.value("inverted_end_ms", 0u);
            const auto g = f.value("gravity_axis", std::string("z"));
            m.meta.gravity_axis = g == "x" ? kX : g == "y" ? kY : kZ;
        }
    } catch (const nlohmann::json::exception& e) {
        throw CalibrationError(CalibrationErrorKind::InvalidModel, e.what());
    }
    validate(m);
    return m;
}

void save_model(const CalibrationModel& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << model_to_json(m);
}

CalibrationModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CalibrationError(CalibrationErrorKind::InvalidModel, "cannot open calibration file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace actipipe::calibration
