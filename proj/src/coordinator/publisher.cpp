#include "flowmon/coordinator/publisher.hpp"

#include "flowmon/broker/service.hpp"

namespace flowmon::coordinator {

void DeltaPublisher::pump() {
  if (inflight_mid_ != 0) return;
  const auto head = queue_.front();
  if (!head) return;
  const broker::DeltaPayload d{head->sensor_id, head->event_seq, head->direction, head->timestamp_ms};
  inflight_mid_ = client_.publish(broker::delta_topic(head->location_id), broker::encode_delta(d), 1);
}

bool DeltaPublisher::on_ack(std::uint32_t mid) {
  if (mid == 0 || mid != inflight_mid_) return false;
  inflight_mid_ = 0;
  queue_.pop_front();
  ++acknowledged_;
  pump();
  return true;
}

}  // namespace flowmon::coordinator
