#pragma once

#include "ocs/domain.hpp"

namespace ocs {

/// Per-task latency split. total is always comm + download + compute.
struct LatencyBreakdown {
  double comm = 0.0;      // s
  double download = 0.0;  // s
  double compute = 0.0;   // s
  double total = 0.0;     // s

  bool operator==(const LatencyBreakdown&) const = default;
};

struct ChannelParams {
  double noise_density_w_per_hz = 0.0;
  double path_loss_exponent = 4.0;
  double tx_power_w = 0.0;
};

ChannelParams channel_params(const ScenarioConfig& cfg);

/// Distances below this are clamped before computing the gain.
inline constexpr double kMinLinkDistanceM = 1.0;

/// h = d^-alpha. Throws on d <= 0; callers clamp with kMinLinkDistanceM.
double channel_gain(double distance_m, double alpha);

/// Noise power over `bandwidth_mbps` (treated as MHz) in watts.
double noise_power(const ChannelParams& ch, double bandwidth_mbps);

double snr(const ChannelParams& ch, double distance_m, double bandwidth_mbps);

/// Shannon uplink share: (B / U) * log2(1 + snr), Mb/s.
double uplink_rate(double bandwidth_mbps, int concurrent, double snr);

/// d / rate seconds. Throws when rate is not positive.
double comm_latency(double data_mb, double rate_mbps);

/// Time to drain the node's FIFO download queue at its bandwidth.
double queue_delay(const NodeRecord& node);

/// Zero when the image is already on the node. An image that is still in
/// the node's queue completes when its own queue entry drains; anything else
/// waits behind the full queue.
double download_latency(const NodeRecord& node, const ImageRecord& image);

double comp_latency(double work_gcycles, double freq_ghz);

/// Throws on any negative component.
LatencyBreakdown total_latency(double comm, double download, double compute);

}  // namespace ocs
