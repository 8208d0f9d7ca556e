#include "actipipe/pipeline.hpp"

namespace actipipe {

Preprocessor::Preprocessor(double fs_hz, std::optional<calibration::CalibrationModel> model,
                           std::size_t ma_window)
    : model_(std::move(model)),
      ma_{dsp::MovingAverage(ma_window), dsp::MovingAverage(ma_window), dsp::MovingAverage(ma_window)},
      hpf_{dsp::hpf_coefficients(fs_hz), dsp::hpf_coefficients(fs_hz), dsp::hpf_coefficients(fs_hz)} {
    if (model_) calibration::validate(*model_);
}

TimedSample Preprocessor::push(const wire::RawSample& s) {
    const Vec3 g = model_ ? calibration::apply_calibration(*model_, s.axes) : s.axes;
    TimedSample out;
    out.timestamp_ms = s.timestamp_ms;
    for (std::size_t a = 0; a < 3; ++a) {
        const double smooth = ma_[a].push(g[a]);
        if (!primed_) hpf_[a].prime(smooth);
        out.g[a] = hpf_[a].process(smooth);
    }
    primed_ = true;
    return out;
}

std::vector<TimedSample> preprocess(const wire::RawSampleStream& stream, double fs_hz,
                                    const std::optional<calibration::CalibrationModel>& model,
                                    std::size_t ma_window) {
    Preprocessor pre(fs_hz, model, ma_window);
    std::vector<TimedSample> out;
    out.reserve(stream.samples.size());
    for (const auto& s : stream.samples) out.push_back(pre.push(s));
    return out;
}

Pipeline::Pipeline(PipelineConfig cfg)
    : cfg_((cfg.classifier.validate(cfg.fs_hz), std::move(cfg))),
      pre_(cfg_.fs_hz, cfg_.calibration, cfg_.moving_average_window),
      fx_(cfg_.features) {}

std::optional<classifier::Decision> Pipeline::push(const wire::RawSample& s) {
    auto f = fx_.push(pre_.push(s));
    if (!f) return std::nullopt;
    last_feature_ = f;
    return classifier::Decision{f->window_start_ms, classifier::decide(f->sma_g, f->fm_hz, cfg_.classifier),
                                f->fm_hz};
}

PipelineResult run_pipeline(const wire::RawSampleStream& stream, const PipelineConfig& cfg) {
    PipelineConfig effective = cfg;
    if (stream.units == wire::Units::G) effective.calibration.reset();
    Pipeline p(std::move(effective));
    PipelineResult r;
    r.features.reserve(stream.samples.size() / cfg.features.window_samples + 1);
    r.decisions.reserve(r.features.capacity());
    for (const auto& s : stream.samples) {
        if (auto d = p.push(s)) {
            r.decisions.push_back(*d);
            r.features.push_back(*p.last_feature());
        }
    }
    return r;
}

}  // namespace actipipe
