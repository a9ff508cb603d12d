#include "fxrl/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

namespace fxrl::nn {

namespace {

constexpr char kMagic[8] = {'F', 'X', 'R', 'L', 'N', 'E', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u64(std::ofstream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t read_u64(std::ifstream& in, const std::string& what) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw CheckpointError("checkpoint truncated reading " + what);
    return v;
}

}

void save_checkpoint(const std::string& path, const TensorMap& params,
                     const NetworkConfig& cfg) {
    validate_shapes(params, cfg);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint: " + path);

    out.write(kMagic, sizeof(kMagic));
    std::uint32_t version = kFormatVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));

    write_u64(out, cfg.feature_dim);
    write_u64(out, cfg.hidden);
    write_u64(out, cfg.window);
    write_u64(out, cfg.fc1_out);
    write_u64(out, cfg.fc2_out);
    write_u64(out, cfg.fc3_out);
    write_u64(out, cfg.num_actions);

    write_u64(out, params.size());
    for (const auto& [name, tensor] : params) {
        write_u64(out, name.size());
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(out, tensor.shape.size());
        for (std::size_t d : tensor.shape) write_u64(out, d);
        out.write(reinterpret_cast<const char*>(tensor.data.data()),
                  static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
    }
    if (!out) throw CheckpointError("write failure on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError(path + ": not a checkpoint file (bad magic)");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kFormatVersion)
        throw CheckpointError(path + ": unsupported checkpoint version " +
                              std::to_string(version));

    Checkpoint ckpt;
    ckpt.config.feature_dim = read_u64(in, "feature_dim");
    ckpt.config.hidden = read_u64(in, "hidden");
    ckpt.config.window = read_u64(in, "window");
    ckpt.config.fc1_out = read_u64(in, "fc1_out");
    ckpt.config.fc2_out = read_u64(in, "fc2_out");
    ckpt.config.fc3_out = read_u64(in, "fc3_out");
    ckpt.config.num_actions = read_u64(in, "num_actions");

    const std::uint64_t count = read_u64(in, "tensor count");
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t name_len = read_u64(in, "name length");
        if (name_len > 4096) throw CheckpointError(path + ": implausible name length");
        std::string name(name_len, '\0');
        in.read(name.data(), static_cast<std::streamsize>(name_len));
        if (!in) throw CheckpointError(path + ": truncated tensor name");

        const std::uint64_t ndim = read_u64(in, "rank of " + name);
        if (ndim > 8) throw CheckpointError(path + ": implausible rank for " + name);
        std::vector<std::size_t> shape(ndim);
        std::size_t numel = 1;
        for (auto& d : shape) {
            d = read_u64(in, "shape of " + name);
            numel *= d;
        }
        Tensor t;
        t.shape = std::move(shape);
        t.data.resize(numel);
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        if (!in) throw CheckpointError(path + ": truncated data for " + name);
        ckpt.params.emplace(std::move(name), std::move(t));
    }

    try {
        validate_shapes(ckpt.params, ckpt.config);
    } catch (const NetworkError& e) {
        throw CheckpointError(path + ": " + e.what());
    }
    return ckpt;
}

}
