#include "actipipe/live.hpp"

#include <map>
#include <thread>

#include "actipipe/bounded_queue.hpp"
#include "actipipe/datagram.hpp"

namespace actipipe {

LiveStats run_live(const LiveOptions& opts) {
    using namespace std::chrono_literals;

    wire::DatagramReceiver rx(opts.port);
    if (opts.on_ready) opts.on_ready(rx.port());

    BoundedQueue<wire::RawSample> queue(opts.queue_capacity);
    std::atomic<bool> done{false};
    LiveStats stats;
    std::atomic<std::size_t> datagrams{0}, corrupt{0};
    wire::ReorderBuffer reorder;

    auto should_stop = [&] { return done.load() || (opts.stop && opts.stop->load()); };

    std::thread ingest([&] {
        while (!should_stop()) {
            auto dgram = rx.receive(50ms);
            if (!dgram) continue;
            ++datagrams;
            auto r = wire::try_decode_packet(*dgram);
            if (!r.ok()) {
                ++corrupt;
                continue;
            }
            for (const auto& p : reorder.push(r.packet)) {
                if (!queue.push(wire::to_sample(p))) return;
            }
        }
        queue.close();
    });

    std::map<std::uint16_t, Pipeline> pipelines;
    while (true) {
        auto s = queue.pop(50ms);
        if (!s) {
            if (queue.closed() && queue.size() == 0) break;
            if (should_stop()) break;
            continue;
        }
        ++stats.samples;
        auto it = pipelines.find(s->node_id);
        if (it == pipelines.end()) it = pipelines.emplace(s->node_id, Pipeline(opts.pipeline)).first;
        if (auto d = it->second.push(*s)) {
            ++stats.decisions;
            if (opts.on_decision) opts.on_decision(s->node_id, *d);
            if (opts.max_windows && stats.decisions >= opts.max_windows) break;
        }
    }
    done = true;
    queue.close();
    ingest.join();

    stats.datagrams = datagrams;
    stats.corrupt = corrupt;
    stats.duplicates = reorder.duplicates();
    stats.late_dropped = reorder.late_dropped();
    stats.queue_high_water = queue.high_water();
    return stats;
}

}  // namespace actipipe
