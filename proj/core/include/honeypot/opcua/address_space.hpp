#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "honeypot/opcua/codec.hpp"
#include "honeypot/opcua/messages.hpp"
#include "honeypot/timeseries.hpp"

namespace honeypot::opcua {

inline constexpr std::uint16_t kAppNamespace = 2;

/// Double value plus source timestamp behind a sequence lock. Readers retry
/// instead of blocking, so a reader never observes a value/timestamp pair that
/// was not written together. Concurrent writers serialize on a mutex that
/// readers never touch.
class ValueCell {
public:
    struct Snapshot {
        double value = 0.0;
        DateTime source_timestamp;
        bool operator==(const Snapshot&) const = default;
    };

    void store(double value, DateTime ts);
    Snapshot load() const;

private:
    std::mutex writer_;
    std::atomic<std::uint64_t> seq_{0};
    std::atomic<std::uint64_t> value_bits_{0};
    std::atomic<std::int64_t> ticks_{0};
};

struct NodeDef {
    NodeId id;
    NodeClass node_class = NodeClass::Object;
    std::string browse_name;
    std::uint16_t browse_ns = 0;
    NodeId parent;                 // null for Root
    std::uint32_t parent_reference = 0;
    NodeId type_definition;
    bool writable = false;
    int cell = -1;                 // index into the value cells for variables
};

/// Fixed information model: Root -> Objects -> Fan0{Voltage}, Fan1{Voltage},
/// Beam{Yaw, Pitch, YawDot, PitchDot}, Target{TargetYaw, TargetPitch}, all
/// application nodes in namespace 2.
class AddressSpace {
public:
    AddressSpace();

    const NodeDef* find(const NodeId& id) const;
    std::vector<const NodeDef*> children(const NodeId& id) const;
    const std::vector<NodeDef>& nodes() const noexcept { return nodes_; }

    /// Variable node holding generated variable k (ts::Var order).
    const NodeDef& variable_for(std::size_t var) const { return nodes_.at(var_nodes_.at(var)); }
    const NodeDef* find_path(std::string_view object, std::string_view variable) const;

    /// Publisher path: one row of the eight variables with one timestamp.
    void publish(std::span<const double> row, DateTime ts);
    void store(const NodeDef& variable, double value, DateTime ts);
    ValueCell::Snapshot load(const NodeDef& variable) const;

    /// Attribute read with OPC UA status semantics.
    DataValue read_attribute(const NodeId& id, std::uint32_t attribute_id, DateTime server_time) const;

    /// Client write: Good for writable variables holding a Double, otherwise a Bad status.
    StatusCode write_value(const NodeId& id, std::uint32_t attribute_id, const DataValue& value, DateTime server_time);

    /// Browse with reference-type and direction filtering.
    BrowseResult browse(const BrowseDescription& request) const;

    // numeric ids of the application nodes
    static constexpr std::uint32_t kFan0 = 1, kFan1 = 2, kBeam = 3, kTarget = 4;
    static constexpr std::uint32_t kFan0Voltage = 10, kFan1Voltage = 11;
    static constexpr std::uint32_t kYaw = 20, kPitch = 21, kYawDot = 22, kPitchDot = 23;
    static constexpr std::uint32_t kTargetYaw = 30, kTargetPitch = 31;

private:
    void add(NodeDef def);

    std::vector<NodeDef> nodes_;
    std::array<std::size_t, ts::kReplicated> var_nodes_{};
    std::deque<ValueCell> cells_;
};

}  // namespace honeypot::opcua
