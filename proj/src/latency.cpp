#include "ocs/latency.hpp"

#include <cmath>

namespace ocs {

ChannelParams channel_params(const ScenarioConfig& cfg) {
  return ChannelParams{
      .noise_density_w_per_hz = dbm_to_watts(cfg.noise_dbm_per_hz),
      .path_loss_exponent = cfg.path_loss_exponent,
      .tx_power_w = dbm_to_watts(cfg.tx_power_dbm),
  };
}

double channel_gain(double distance_m, double alpha) {
  if (!(distance_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "degenerate distance");
  return std::pow(distance_m, -alpha);
}

double noise_power(const ChannelParams& ch, double bandwidth_mbps) {
  return ch.noise_density_w_per_hz * bandwidth_mbps * 1e6;
}

double snr(const ChannelParams& ch, double distance_m, double bandwidth_mbps) {
  double d = std::max(distance_m, kMinLinkDistanceM);
  return ch.tx_power_w * channel_gain(d, ch.path_loss_exponent) / noise_power(ch, bandwidth_mbps);
}

double uplink_rate(double bandwidth_mbps, int concurrent, double snr) {
  if (concurrent < 1) throw Error(ErrorCode::InvalidArgument, "concurrent transmissions must be >= 1");
  if (!(bandwidth_mbps > 0.0)) throw Error(ErrorCode::InvalidArgument, "bandwidth must be > 0");
  if (!(snr >= 0.0)) throw Error(ErrorCode::InvalidArgument, "snr must be >= 0");
  return bandwidth_mbps / concurrent * std::log2(1.0 + snr);
}

double comm_latency(double data_mb, double rate_mbps) {
  if (!(rate_mbps > 0.0)) throw Error(ErrorCode::InvalidArgument, "unreachable node");
  return data_mb / rate_mbps;
}

double queue_delay(const NodeRecord& node) {
  double remaining = 0.0;
  for (const auto& d : node.download_queue) remaining += d.remaining_gbit;
  return remaining * kMegabitsPerGigabit / node.bandwidth;
}

double download_latency(const NodeRecord& node, const ImageRecord& image) {
  if (node.has_image(image.id)) return 0.0;
  double ahead = 0.0;
  for (const auto& d : node.download_queue) {
    ahead += d.remaining_gbit;
    if (d.image == image.id) return ahead * kMegabitsPerGigabit / node.bandwidth;
  }
  return image.size * kMegabitsPerGigabit / node.bandwidth + queue_delay(node);
}

double comp_latency(double work_gcycles, double freq_ghz) {
  if (!(freq_ghz > 0.0)) throw Error(ErrorCode::InvalidArgument, "frequency must be > 0");
  return work_gcycles / freq_ghz;
}

LatencyBreakdown total_latency(double comm, double download, double compute) {
  if (comm < 0.0 || download < 0.0 || compute < 0.0)
    throw Error(ErrorCode::InvalidArgument, "negative latency component");
  return LatencyBreakdown{comm, download, compute, comm + download + compute};
}

}  // namespace ocs
