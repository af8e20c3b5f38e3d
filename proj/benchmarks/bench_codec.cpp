#include <benchmark/benchmark.h>

#include "honeypot/opcua/address_space.hpp"
#include "honeypot/opcua/messages.hpp"

using namespace honeypot::opcua;

namespace {

Message read_request(std::size_t nodes) {
    ReadRequest req;
    req.header.request_handle = 7;
    for (std::size_t k = 0; k < nodes; ++k) {
        ReadValueId id;
        id.node_id = NodeId(kAppNamespace, static_cast<std::uint32_t>(20 + k % 4));
        req.nodes_to_read.push_back(id);
    }
    SecureMessage m;
    m.channel_id = 1;
    m.token_id = 1;
    m.sequence_number = 2;
    m.request_id = 2;
    m.body = req;
    return m;
}

Message read_response(std::size_t nodes) {
    ReadResponse resp;
    for (std::size_t k = 0; k < nodes; ++k) {
        DataValue dv;
        dv.value = Variant{0.125 * static_cast<double>(k)};
        dv.source_timestamp = DateTime{133000000000000000};
        dv.server_timestamp = DateTime{133000000000000001};
        resp.results.push_back(dv);
    }
    SecureMessage m;
    m.channel_id = 1;
    m.token_id = 1;
    m.sequence_number = 2;
    m.request_id = 2;
    m.body = resp;
    return m;
}

void BM_EncodeReadResponse(benchmark::State& state) {
    const auto m = read_response(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(encode_message(m));
}
BENCHMARK(BM_EncodeReadResponse)->Arg(1)->Arg(64);

void BM_DecodeReadRequest(benchmark::State& state) {
    const auto bytes = encode_message(read_request(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(decode_message(bytes));
    state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_DecodeReadRequest)->Arg(1)->Arg(64);

}  // namespace
