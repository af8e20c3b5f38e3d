#include "honeypot/opcua/address_space.hpp"

#include <bit>
#include <stdexcept>

#include "honeypot/opcua/status.hpp"

namespace honeypot::opcua {

void ValueCell::store(double value, DateTime ts) {
    std::lock_guard lock(writer_);
    const std::uint64_t s = seq_.load(std::memory_order_relaxed);
    seq_.store(s + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    value_bits_.store(std::bit_cast<std::uint64_t>(value), std::memory_order_relaxed);
    ticks_.store(ts.ticks, std::memory_order_relaxed);
    seq_.store(s + 2, std::memory_order_release);
}

ValueCell::Snapshot ValueCell::load() const {
    for (;;) {
        const std::uint64_t s1 = seq_.load(std::memory_order_acquire);
        const std::uint64_t bits = value_bits_.load(std::memory_order_relaxed);
        const std::int64_t ticks = ticks_.load(std::memory_order_relaxed);
        std::atomic_thread_fence(std::memory_order_acquire);
        const std::uint64_t s2 = seq_.load(std::memory_order_relaxed);
        if (s1 == s2 && (s1 & 1) == 0) return {std::bit_cast<double>(bits), {ticks}};
    }
}

namespace {

NodeId app(std::uint32_t id) { return NodeId(kAppNamespace, id); }
NodeId std_node(std::uint32_t id) { return NodeId(0, id); }

bool reference_matches(std::uint32_t ref, const NodeId& filter, bool subtypes) {
    if (filter.is_null()) return true;
    if (filter.ns != 0 || !filter.is_numeric()) return false;
    const std::uint32_t f = filter.numeric();
    if (f == ref) return true;
    if (!subtypes) return false;
    if (f == ids::References) return true;
    if (f == ids::HierarchicalReferences) return ref == ids::Organizes || ref == ids::HasComponent;
    return false;
}

bool class_matches(NodeClass c, std::uint32_t mask) { return mask == 0 || (mask & static_cast<std::uint32_t>(c)); }

ReferenceDescription describe(const NodeDef& target, std::uint32_t ref, bool forward) {
    ReferenceDescription r;
    r.reference_type_id = std_node(ref);
    r.is_forward = forward;
    r.node_id.node = target.id;
    r.browse_name = {target.browse_ns, target.browse_name};
    r.display_name = {std::nullopt, target.browse_name};
    r.node_class = static_cast<std::uint32_t>(target.node_class);
    r.type_definition.node = target.type_definition;
    return r;
}

DataValue bad(std::uint32_t code, DateTime server_time) {
    DataValue v;
    v.status = StatusCode{code};
    v.server_timestamp = server_time;
    return v;
}

}  // namespace

AddressSpace::AddressSpace() {
    add({std_node(ids::RootFolder), NodeClass::Object, "Root", 0, {}, 0, std_node(ids::FolderType)});
    add({std_node(ids::ObjectsFolder), NodeClass::Object, "Objects", 0, std_node(ids::RootFolder), ids::Organizes,
         std_node(ids::FolderType)});

    auto object = [&](std::uint32_t id, const char* name) {
        add({app(id), NodeClass::Object, name, kAppNamespace, std_node(ids::ObjectsFolder), ids::Organizes,
             std_node(ids::BaseObjectType)});
    };
    auto variable = [&](std::uint32_t id, const char* name, std::uint32_t parent, bool writable, ts::Var var) {
        NodeDef def{app(id), NodeClass::Variable, name, kAppNamespace, app(parent), ids::HasComponent,
                    std_node(ids::BaseDataVariableType), writable, static_cast<int>(cells_.size())};
        cells_.emplace_back();
        var_nodes_[static_cast<std::size_t>(var)] = nodes_.size();
        add(std::move(def));
    };

    object(kFan0, "Fan0");
    object(kFan1, "Fan1");
    object(kBeam, "Beam");
    object(kTarget, "Target");
    variable(kFan0Voltage, "Voltage", kFan0, false, ts::Var::U0);
    variable(kFan1Voltage, "Voltage", kFan1, false, ts::Var::U1);
    variable(kYaw, "Yaw", kBeam, false, ts::Var::Yaw);
    variable(kPitch, "Pitch", kBeam, false, ts::Var::Pitch);
    variable(kYawDot, "YawDot", kBeam, false, ts::Var::YawDot);
    variable(kPitchDot, "PitchDot", kBeam, false, ts::Var::PitchDot);
    variable(kTargetYaw, "TargetYaw", kTarget, true, ts::Var::TargetYaw);
    variable(kTargetPitch, "TargetPitch", kTarget, true, ts::Var::TargetPitch);

    const DateTime now = datetime_now();
    for (auto& c : cells_) c.store(0.0, now);
}

void AddressSpace::add(NodeDef def) {
    if (find(def.id)) throw std::logic_error("duplicate node id " + def.id.to_string());
    nodes_.push_back(std::move(def));
}

const NodeDef* AddressSpace::find(const NodeId& id) const {
    for (const auto& n : nodes_) {
        if (n.id == id) return &n;
    }
    return nullptr;
}

std::vector<const NodeDef*> AddressSpace::children(const NodeId& id) const {
    std::vector<const NodeDef*> out;
    for (const auto& n : nodes_) {
        if (!n.parent.is_null() && n.parent == id) out.push_back(&n);
    }
    return out;
}

const NodeDef* AddressSpace::find_path(std::string_view object, std::string_view variable) const {
    for (const auto* parent : children(std_node(ids::ObjectsFolder))) {
        if (parent->browse_name != object) continue;
        for (const auto* child : children(parent->id)) {
            if (child->browse_name == variable) return child;
        }
    }
    return nullptr;
}

void AddressSpace::publish(std::span<const double> row, DateTime ts) {
    if (row.size() != ts::kReplicated) throw std::invalid_argument("publish: row must hold 8 values");
    for (std::size_t k = 0; k < ts::kReplicated; ++k) store(variable_for(k), row[k], ts);
}

void AddressSpace::store(const NodeDef& variable, double value, DateTime ts) {
    cells_.at(static_cast<std::size_t>(variable.cell)).store(value, ts);
}

ValueCell::Snapshot AddressSpace::load(const NodeDef& variable) const {
    return cells_.at(static_cast<std::size_t>(variable.cell)).load();
}

DataValue AddressSpace::read_attribute(const NodeId& id, std::uint32_t attribute_id, DateTime server_time) const {
    const NodeDef* node = find(id);
    if (!node) return bad(status::BadNodeIdUnknown, server_time);
    const bool is_var = node->node_class == NodeClass::Variable;

    DataValue out;
    out.server_timestamp = server_time;
    auto set = [&](auto v) { out.value = Variant{v}; };
    switch (attribute_id) {
        case attr::NodeId: set(node->id); break;
        case attr::NodeClass: set(static_cast<std::int32_t>(node->node_class)); break;
        case attr::BrowseName: set(QualifiedName{node->browse_ns, node->browse_name}); break;
        case attr::DisplayName: set(LocalizedText{std::nullopt, node->browse_name}); break;
        case attr::Description: set(LocalizedText{}); break;
        case attr::WriteMask:
        case attr::UserWriteMask: set(std::uint32_t{0}); break;
        case attr::EventNotifier:
            if (is_var) return bad(status::BadAttributeIdInvalid, server_time);
            set(std::uint8_t{0});
            break;
        case attr::Value: {
            if (!is_var) return bad(status::BadAttributeIdInvalid, server_time);
            const auto snap = load(*node);
            set(snap.value);
            out.source_timestamp = snap.source_timestamp;
            break;
        }
        case attr::DataType:
            if (!is_var) return bad(status::BadAttributeIdInvalid, server_time);
            set(std_node(ids::Double));
            break;
        case attr::ValueRank:
            if (!is_var) return bad(status::BadAttributeIdInvalid, server_time);
            set(std::int32_t{-1});
            break;
        case attr::AccessLevel:
        case attr::UserAccessLevel:
            if (!is_var) return bad(status::BadAttributeIdInvalid, server_time);
            set(std::uint8_t(node->writable ? 0x03 : 0x01));
            break;
        default: return bad(status::BadAttributeIdInvalid, server_time);
    }
    return out;
}

StatusCode AddressSpace::write_value(const NodeId& id, std::uint32_t attribute_id, const DataValue& value,
                                     DateTime server_time) {
    const NodeDef* node = find(id);
    if (!node) return {status::BadNodeIdUnknown};
    if (attribute_id != attr::Value) {
        return {attribute_id >= attr::NodeId && attribute_id <= 27 ? status::BadNotWritable
                                                                   : status::BadAttributeIdInvalid};
    }
    if (node->node_class != NodeClass::Variable) return {status::BadAttributeIdInvalid};
    if (!node->writable) return {status::BadNotWritable};
    if (!value.value) return {status::BadTypeMismatch};
    const auto* d = std::get_if<double>(&value.value->value);
    if (!d) return {status::BadTypeMismatch};
    store(*node, *d, server_time);
    return {status::Good};
}

BrowseResult AddressSpace::browse(const BrowseDescription& request) const {
    BrowseResult result;
    const NodeDef* node = find(request.node_id);
    if (!node) {
        result.status = {status::BadNodeIdUnknown};
        return result;
    }
    if (request.browse_direction > 2) {
        result.status = {status::BadBrowseDirectionInvalid};
        return result;
    }
    const bool forward = request.browse_direction == 0 || request.browse_direction == 2;
    const bool inverse = request.browse_direction == 1 || request.browse_direction == 2;
    if (forward) {
        for (const auto* child : children(node->id)) {
            if (reference_matches(child->parent_reference, request.reference_type_id, request.include_subtypes) &&
                class_matches(child->node_class, request.node_class_mask)) {
                result.references.push_back(describe(*child, child->parent_reference, true));
            }
        }
        const std::uint32_t type_class = node->node_class == NodeClass::Variable ? 16u : 8u;
        if (!node->type_definition.is_null() &&
            reference_matches(ids::HasTypeDefinition, request.reference_type_id, request.include_subtypes) &&
            (request.node_class_mask == 0 || (request.node_class_mask & type_class))) {
            ReferenceDescription r;
            r.reference_type_id = std_node(ids::HasTypeDefinition);
            r.node_id.node = node->type_definition;
            r.browse_name = {0, node->type_definition.numeric() == ids::FolderType            ? "FolderType"
                                : node->type_definition.numeric() == ids::BaseObjectType ? "BaseObjectType"
                                                                                         : "BaseDataVariableType"};
            r.display_name = {std::nullopt, r.browse_name.name};
            r.node_class = type_class;
            result.references.push_back(std::move(r));
        }
    }
    if (inverse && !node->parent.is_null()) {
        const NodeDef* parent = find(node->parent);
        if (parent && reference_matches(node->parent_reference, request.reference_type_id, request.include_subtypes) &&
            class_matches(parent->node_class, request.node_class_mask)) {
            result.references.push_back(describe(*parent, node->parent_reference, false));
        }
    }
    return result;
}

}  // namespace honeypot::opcua
