#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "actipipe/bounded_queue.hpp"
#include "actipipe/datagram.hpp"
#include "actipipe/eval.hpp"
#include "actipipe/live.hpp"
#include "actipipe/pipeline.hpp"
#include "actipipe/synth.hpp"

using namespace actipipe;
using namespace std::chrono_literals;
using classifier::ActivityLabel;

TEST(Preprocess, ZeroNoiseRestSettlesToZeroSma) {
    auto rest = synth::ActivityProfile::rest();
    rest.noise_sigma_g = 0.0;
    const auto s = synth::generate_session(std::vector<synth::ProtocolStep>{{rest, 120.0}}, 50.0, 1);
    for (const auto& f : features::feature_stream(preprocess(synth::to_g_stream(s), 50.0, std::nullopt)))
        EXPECT_LT(f.sma_g, 1e-3);
}

TEST(Preprocess, UnprimedFilterRingsOnGravityStep) {
    // Guards the reason for priming: without it the first windows carry the
    // HPF step response and would read as movement.
    auto f = dsp::hpf_coefficients(50.0);
    std::vector<Vec3> g;
    for (int i = 0; i < 50; ++i) g.push_back({0.0, 0.0, f.process(1.0)});
    EXPECT_GT(features::compute_sma(g, 1.0), 0.13);
}

TEST(Preprocess, MillivoltAndGPathsAgree) {
    const auto s = synth::generate_session(synth::default_protocol(), 50.0, 2);
    const auto model = calibration::CalibrationModel::nominal();
    const auto from_g = preprocess(synth::to_g_stream(s), 50.0, std::nullopt);
    const auto from_mv = preprocess(synth::to_millivolt_stream(s, model), 50.0, model);
    ASSERT_EQ(from_g.size(), from_mv.size());
    // Rounding to whole millivolts costs at most 0.0025 g per sample.
    for (std::size_t i = 0; i < from_g.size(); i += 7)
        for (std::size_t a = 0; a < 3; ++a) ASSERT_NEAR(from_g[i].g[a], from_mv[i].g[a], 0.01);
}

TEST(Pipeline, StreamingMatchesBatch) {
    const auto s = synth::generate_session(synth::default_protocol(), 50.0, 3);
    const auto stream = synth::to_g_stream(s);
    const auto batch = run_pipeline(stream, PipelineConfig{});
    Pipeline p(PipelineConfig{});
    std::vector<classifier::Decision> streamed;
    for (const auto& smp : stream.samples)
        if (auto d = p.push(smp)) streamed.push_back(*d);
    EXPECT_EQ(streamed, batch.decisions);
    EXPECT_EQ(batch.features.size(), 900u);
    EXPECT_EQ(batch.decisions.size(), 900u);
}

TEST(Pipeline, DefaultSessionMajorityMatchesTruth) {
    for (std::uint64_t seed : {7u, 8u, 9u}) {
        const auto s = synth::generate_session(synth::default_protocol(), 50.0, seed);
        const auto r = run_pipeline(synth::to_g_stream(s), PipelineConfig{});
        const auto rep = eval::evaluate(r.decisions, s.annotations, {1000, 6});
        for (auto l : {ActivityLabel::Rest, ActivityLabel::Walk, ActivityLabel::Run}) {
            EXPECT_EQ(rep.stats(l).n_t, 1u);
            EXPECT_EQ(rep.stats(l).d_t, 1u) << classifier::to_string(l) << " seed " << seed;
        }
        EXPECT_EQ(*rep.rest_vs_movement_accuracy, 1.0);
    }
}

TEST(Pipeline, AllRestSessionIsAllRest) {
    const auto s = synth::generate_session(std::vector<synth::ProtocolStep>{{synth::ActivityProfile::rest(), 120.0}}, 50.0, 4);
    const auto r = run_pipeline(synth::to_g_stream(s), PipelineConfig{});
    const auto rep = eval::evaluate(r.decisions, s.annotations, {1000, 6});
    EXPECT_EQ(rep.confusion[0][0], rep.scored_windows);
}

TEST(Pipeline, Deterministic) {
    const auto s = synth::generate_session(synth::default_protocol(), 50.0, 5);
    const auto a = run_pipeline(synth::to_g_stream(s), PipelineConfig{});
    const auto b = run_pipeline(synth::to_g_stream(s), PipelineConfig{});
    EXPECT_EQ(a.features, b.features);
    EXPECT_EQ(a.decisions, b.decisions);
}

TEST(BoundedQueue, BlocksWhenFullAndUnblocksOnPop) {
    BoundedQueue<int> q(2);
    ASSERT_TRUE(q.push(1));
    ASSERT_TRUE(q.push(2));
    std::atomic<bool> pushed{false};
    std::thread t([&] {
        q.push(3);
        pushed = true;
    });
    std::this_thread::sleep_for(50ms);
    EXPECT_FALSE(pushed.load());
    EXPECT_EQ(q.pop(100ms), 1);
    t.join();
    EXPECT_TRUE(pushed.load());
    EXPECT_EQ(q.pop(100ms), 2);
    EXPECT_EQ(q.pop(100ms), 3);
    EXPECT_EQ(q.high_water(), 2u);
}

TEST(BoundedQueue, CloseReleasesBlockedProducer) {
    BoundedQueue<int> q(1);
    q.push(1);
    std::atomic<int> result{-1};
    std::thread t([&] { result = q.push(2) ? 1 : 0; });
    std::this_thread::sleep_for(30ms);
    q.close();
    t.join();
    EXPECT_EQ(result.load(), 0);
}

TEST(BoundedQueue, PopTimesOutWhenEmpty) {
    BoundedQueue<int> q(4);
    EXPECT_FALSE(q.pop(20ms).has_value());
}

TEST(Live, ClassifiesDatagramStream) {
    const auto s = synth::generate_session(synth::parse_protocol("rest:20,run:20"), 50.0, 6);
    const auto packets = synth::to_packets(s, calibration::CalibrationModel::nominal());

    std::atomic<std::uint16_t> port{0};
    std::vector<classifier::Decision> got;
    LiveOptions opts;
    opts.pipeline.calibration = calibration::CalibrationModel::nominal();
    opts.max_windows = 40;
    opts.on_ready = [&](std::uint16_t p) { port = p; };
    opts.on_decision = [&](std::uint16_t node, const classifier::Decision& d) {
        EXPECT_EQ(node, 1);
        got.push_back(d);
    };
    LiveStats stats;
    std::thread server([&] { stats = run_live(opts); });
    while (port.load() == 0) std::this_thread::sleep_for(1ms);

    wire::DatagramSender tx("127.0.0.1", port.load());
    for (std::size_t i = 0; i < packets.size(); ++i) {
        tx.send(packets[i]);
        if (i % 10 == 0) std::this_thread::sleep_for(1ms);
    }
    // Trailing packets push the last window through the reorder buffer.
    for (std::uint16_t k = 0; k < 20; ++k) {
        auto p = packets.back();
        p.seq = static_cast<std::uint16_t>(p.seq + 1 + k);
        p.timestamp_ms += 20u * (k + 1u);
        tx.send(p);
    }
    server.join();

    ASSERT_EQ(got.size(), 40u);
    const auto batch = run_pipeline(synth::to_millivolt_stream(s, calibration::CalibrationModel::nominal()),
                                    PipelineConfig{.calibration = calibration::CalibrationModel::nominal()});
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], batch.decisions[i]) << i;
    EXPECT_EQ(stats.decisions, 40u);
    EXPECT_EQ(stats.corrupt, 0u);
    EXPECT_LE(stats.queue_high_water, 1024u);
}

TEST(Live, StopFlagEndsRun) {
    std::atomic<bool> stop{false};
    LiveOptions opts;
    opts.stop = &stop;
    std::thread server([&] { run_live(opts); });
    std::this_thread::sleep_for(100ms);
    stop = true;
    server.join();
    SUCCEED();
}
