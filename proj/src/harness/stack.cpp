#include "flowmon/harness/stack.hpp"

#include <filesystem>

#include "flowmon/broker/whitelist.hpp"
#include "flowmon/common/random.hpp"
#include "flowmon/registry/geo.hpp"

namespace flowmon::harness {

namespace {

std::string in_dir(const std::string& dir, const char* name) {
  return dir.empty() ? std::string{} : (std::filesystem::path(dir) / name).string();
}

}  // namespace

LocalStack::LocalStack(StackOptions options) : options_(std::move(options)), clock_(options_.start_ms) {
  if (!options_.state_dir.empty()) std::filesystem::create_directories(options_.state_dir);
  broker::BrokerOptions bo;
  bo.whitelist_path = whitelist_path();
  bo.journal_path = journal_path();
  bo.snapshot_interval_ms = options_.snapshot_interval_ms;
  if (!bo.whitelist_path.empty() && !std::filesystem::exists(bo.whitelist_path)) {
    broker::Whitelist().save(bo.whitelist_path);
  }
  broker_ = std::make_unique<broker::BrokerService>(clock_, bo);
  registry::RegistryOptions ro;
  ro.state_path = registry_path();
  ro.business_emails = {kOwnerEmail};
  ro.pbkdf2_iterations = options_.pbkdf2_iterations;
  registry_ = std::make_unique<registry::Registry>(*broker_, registry::StubGeocoder(), ro);
}

std::string LocalStack::whitelist_path() const { return in_dir(options_.state_dir, "whitelist.json"); }
std::string LocalStack::journal_path() const { return in_dir(options_.state_dir, "occupancy.journal"); }
std::string LocalStack::registry_path() const { return in_dir(options_.state_dir, "registry.json"); }

std::string LocalStack::owner_token() {
  if (!owner_token_.empty()) return owner_token_;
  if (!registry_->user_by_email(kOwnerEmail)) registry_->register_user(kOwnerEmail, kOwnerPassword);
  owner_token_ = registry_->login(kOwnerEmail, kOwnerPassword);
  return owner_token_;
}

std::string LocalStack::create_activity(const std::string& name, const std::string& address) {
  return registry_->create_activity(owner_token(), name, address, 100).activity_id;
}

std::string LocalStack::register_device(const std::string& device_id) {
  broker::DeviceRecord rec;
  rec.device_id = device_id;
  rec.keys = {random_hex(broker::kKeyHexLength / 2)};
  broker_->whitelist().add_device(rec);
  broker_->save_whitelist();
  return rec.keys.front();
}

void LocalStack::associate(const std::string& device_id, const std::string& activity_id) {
  const auto grant = registry_->issue_otp(owner_token(), activity_id);
  registry_->associate_device(owner_token(), device_id, grant.otp);
}

LocalDevice::LocalDevice(LocalStack& stack, coordinator::DeviceSettings settings, broker::LinkFaults faults,
                         std::uint64_t first_event_seq)
    : stack_(stack), link_(std::make_shared<broker::MemoryLink>(stack.broker().core(), faults)) {
  device_ = std::make_unique<coordinator::Device>(link_, stack.clock(), std::move(settings), first_event_seq);
  device_->start();
}

void LocalDevice::step() {
  link_->pump();
  device_->tick();
  link_->pump();
  stack_.broker().tick();
  link_->pump();
  device_->tick();
}

bool LocalDevice::provision(std::int64_t max_ms) {
  const std::int64_t deadline = stack_.clock().now_ms() + max_ms;
  step();
  while (!device_->provisioned()) {
    device_->check_rejected();
    if (stack_.clock().now_ms() >= deadline) return false;
    stack_.clock().advance(100);
    step();
  }
  return true;
}

std::vector<coordinator::DeltaUpdate> LocalDevice::feed(const thermal::ThermalFrame& frame) {
  if (frame.timestamp_ms > stack_.clock().now_ms()) stack_.clock().set(frame.timestamp_ms);
  auto out = device_->on_frame(frame);
  step();
  return out;
}

bool LocalDevice::settle(std::int64_t max_ms) {
  const std::int64_t deadline = stack_.clock().now_ms() + max_ms;
  step();
  while (device_->queue().size() > 0 || device_->publisher().in_flight()) {
    if (stack_.clock().now_ms() >= deadline) return false;
    stack_.clock().advance(100);
    step();
  }
  return true;
}

}  // namespace flowmon::harness
