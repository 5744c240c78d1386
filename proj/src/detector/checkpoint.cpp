#include "acp/detector/checkpoint.hpp"

#include <bit>
#include <chrono>
#include <cstring>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "acp/corpus.hpp"

namespace acp::detector {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw CheckpointError("checkpoint truncated");
    T value;
    std::memcpy(&value, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
}

json losses_json(const LossBreakdown& l) {
    return {{"rpn_cls", l.rpn_cls}, {"rpn_reg", l.rpn_reg}, {"head_cls", l.head_cls},
            {"head_reg", l.head_reg}, {"total", l.total}};
}

LossBreakdown losses_from_json(const json& j) {
    return {j.at("rpn_cls").get<double>(), j.at("rpn_reg").get<double>(), j.at("head_cls").get<double>(),
            j.at("head_reg").get<double>(), j.at("total").get<double>()};
}

}  // namespace

std::string utc_timestamp() {
    const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
}

Checkpoint Checkpoint::from_network(const Network& net, CheckpointMetadata metadata) {
    Checkpoint c;
    c.config = net.config();
    c.metadata = std::move(metadata);
    const ParamStore& p = net.params();
    for (std::size_t i = 0; i < p.entries().size(); ++i) {
        const ParamInfo& e = p.entry(i);
        NamedTensor t{e.name, e.shape, std::vector<float>(e.size)};
        const double* src = p.data(i);
        for (std::size_t k = 0; k < e.size; ++k) t.values[k] = float(src[k]);
        c.tensors.push_back(std::move(t));
    }
    return c;
}

Network Checkpoint::to_network() const {
    Network net(config, 0);
    ParamStore& p = net.params();
    if (p.entries().size() != tensors.size()) {
        throw CheckpointError(fmt::format("checkpoint has {} tensors, config expects {}", tensors.size(),
                                          p.entries().size()));
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const ParamInfo& e = p.entry(i);
        const NamedTensor& t = tensors[i];
        if (t.name != e.name || t.shape != e.shape || t.values.size() != e.size) {
            throw CheckpointError("checkpoint tensor \"" + t.name + "\" does not match expected \"" + e.name + "\"");
        }
        double* dst = p.data(i);
        for (std::size_t k = 0; k < e.size; ++k) dst[k] = double(t.values[k]);
    }
    return net;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    json tensors = json::array();
    std::size_t offset = 0;
    for (const auto& t : ckpt.tensors) {
        tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"count", t.values.size()}});
        offset += t.values.size() * sizeof(float);
    }
    const auto& m = ckpt.metadata;
    const json header = {
        {"format", "acp-detector"},
        {"version", kCheckpointVersion},
        {"config", to_json(ckpt.config)},
        {"metadata",
         {{"iterations_run", m.iterations_run},
          {"best_step", m.best_step},
          {"best_val_loss", m.best_val_loss},
          {"final_losses", losses_json(m.final_losses)},
          {"split_seed", m.split_seed},
          {"created_at", m.created_at}}},
        {"tensors", tensors},
    };
    const std::string text = header.dump();

    std::string out(kCheckpointMagic, sizeof(kCheckpointMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, text.size());
    out += text;
    out.reserve(out.size() + offset);
    for (const auto& t : ckpt.tensors) {
        out.append(reinterpret_cast<const char*>(t.values.data()), t.values.size() * sizeof(float));
    }
    return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
    if (bytes.size() < sizeof(kCheckpointMagic) ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
        throw CheckpointError("not a detector checkpoint (bad magic)");
    }
    std::size_t pos = sizeof(kCheckpointMagic);
    const auto version = get<std::uint32_t>(bytes, pos);
    if (version != kCheckpointVersion) {
        throw CheckpointError(fmt::format("unsupported checkpoint version {} (expected {})", version,
                                          kCheckpointVersion));
    }
    const auto header_len = get<std::uint64_t>(bytes, pos);
    if (pos + header_len > bytes.size()) throw CheckpointError("checkpoint truncated");
    Checkpoint c;
    std::size_t data_start = pos + header_len;
    try {
        const json header = json::parse(bytes.substr(pos, header_len));
        c.config = detector_config_from_json(header.at("config"));
        const json& m = header.at("metadata");
        c.metadata.iterations_run = m.at("iterations_run").get<int>();
        c.metadata.best_step = m.at("best_step").get<int>();
        c.metadata.best_val_loss = m.at("best_val_loss").get<double>();
        c.metadata.final_losses = losses_from_json(m.at("final_losses"));
        c.metadata.split_seed = m.at("split_seed").get<std::uint64_t>();
        c.metadata.created_at = m.at("created_at").get<std::string>();
        for (const auto& t : header.at("tensors")) {
            NamedTensor nt;
            nt.name = t.at("name").get<std::string>();
            nt.shape = t.at("shape").get<std::vector<int>>();
            const auto offset = t.at("offset").get<std::size_t>();
            const auto count = t.at("count").get<std::size_t>();
            if (data_start + offset + count * sizeof(float) > bytes.size()) {
                throw CheckpointError("checkpoint truncated in tensor \"" + nt.name + "\"");
            }
            nt.values.resize(count);
            std::memcpy(nt.values.data(), bytes.data() + data_start + offset, count * sizeof(float));
            c.tensors.push_back(std::move(nt));
        }
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
    }
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::string bytes;
    try {
        bytes = read_text_file(path);
    } catch (const std::exception& e) {
        throw CheckpointError("cannot read checkpoint " + path.string() + ": " + e.what());
    }
    return deserialize_checkpoint(bytes);
}

}  // namespace acp::detector
