#include "carbideseg/tensorio.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "carbideseg/unet.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace carbideseg {

namespace {

constexpr char kMagic[8] = {'C', 'S', 'E', 'G', 'T', 'N', 'S', '1'};

// assumes a little-endian host; asserted once at load time
void check_endianness() {
    const std::uint32_t probe = 1;
    char b;
    std::memcpy(&b, &probe, 1);
    if (b != 1) throw std::runtime_error("tensorio: big-endian hosts are not supported");
}

} // namespace

void write_tensor_file(const std::string& path, const TensorFileContent& content) {
    check_endianness();
    json header;
    header["meta"] = content.meta_json.empty() ? json::object()
                                               : json::parse(content.meta_json);
    header["dtype"] = "f32";
    header["tensors"] = json::array();
    std::uint64_t offset = 0;
    for (const auto& t : content.tensors) {
        std::size_t expected = 1;
        for (int d : t.shape) expected *= static_cast<std::size_t>(d < 0 ? 0 : d);
        if (expected != t.data.size())
            throw std::invalid_argument("write_tensor_file: shape of '" + t.name +
                                        "' does not match its payload size");
        header["tensors"].push_back({{"name", t.name},
                                     {"shape", t.shape},
                                     {"offset", offset},
                                     {"count", t.data.size()}});
        offset += t.data.size() * sizeof(float);
    }
    const std::string hs = header.dump();

    // atomic replace: write to a temp path, then rename
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("write_tensor_file: cannot open " + tmp.string());
        os.write(kMagic, sizeof(kMagic));
        std::uint64_t hlen = hs.size();
        os.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
        os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
        for (const auto& t : content.tensors)
            os.write(reinterpret_cast<const char*>(t.data.data()),
                     static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!os) throw std::runtime_error("write_tensor_file: write failed for " + path);
    }
    fs::rename(tmp, target);
}

TensorFileContent read_tensor_file(const std::string& path) {
    check_endianness();
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_tensor_file: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("read_tensor_file: bad magic in " + path);
    std::uint64_t hlen = 0;
    is.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
    std::string hs(hlen, '\0');
    is.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!is) throw std::runtime_error("read_tensor_file: truncated header in " + path);
    json header = json::parse(hs);
    if (header.at("dtype").get<std::string>() != "f32")
        throw std::runtime_error("read_tensor_file: unsupported dtype in " + path);

    TensorFileContent out;
    out.meta_json = header.at("meta").dump();
    const std::streampos payload_start = is.tellg();
    for (const auto& e : header.at("tensors")) {
        NamedTensor t;
        t.name = e.at("name").get<std::string>();
        t.shape = e.at("shape").get<std::array<int, 4>>();
        t.data.resize(e.at("count").get<std::size_t>());
        is.seekg(payload_start + static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
        is.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        if (!is) throw std::runtime_error("read_tensor_file: truncated payload in " + path);
        out.tensors.push_back(std::move(t));
    }
    return out;
}

} // namespace carbideseg

namespace carbideseg::net {

namespace {

json config_to_json(const UNetConfig& cfg) {
    return json{{"in_channels", cfg.in_channels},
                {"encoder_blocks", cfg.encoder_blocks},
                {"base_features", cfg.base_features},
                {"convs_per_block", cfg.convs_per_block},
                {"kernel_size", cfg.kernel_size},
                {"out_channels", cfg.out_channels},
                {"mve_head", cfg.mve_head},
                {"bilinear_upsample", cfg.bilinear_upsample},
                {"bn_momentum", cfg.bn_momentum},
                {"bn_eps", cfg.bn_eps}};
}

UNetConfig config_from_json(const json& j) {
    UNetConfig cfg;
    cfg.in_channels = j.at("in_channels").get<int>();
    cfg.encoder_blocks = j.at("encoder_blocks").get<int>();
    cfg.base_features = j.at("base_features").get<int>();
    cfg.convs_per_block = j.at("convs_per_block").get<int>();
    cfg.kernel_size = j.at("kernel_size").get<int>();
    cfg.out_channels = j.at("out_channels").get<int>();
    cfg.mve_head = j.at("mve_head").get<bool>();
    cfg.bilinear_upsample = j.at("bilinear_upsample").get<bool>();
    cfg.bn_momentum = j.at("bn_momentum").get<double>();
    cfg.bn_eps = j.at("bn_eps").get<double>();
    return cfg;
}

} // namespace

void save_checkpoint(const UNet<float>& net, const std::string& path) {
    TensorFileContent content;
    json meta;
    meta["format"] = "carbideseg-checkpoint";
    meta["config"] = config_to_json(net.config());
    content.meta_json = meta.dump();
    for (const auto& e : net.params().entries) {
        NamedTensor t;
        t.name = e.name;
        t.shape = {e.value.n, e.value.c, e.value.h, e.value.w};
        t.data = e.value.data;
        content.tensors.push_back(std::move(t));
    }
    write_tensor_file(path, content);
}

UNet<float> load_checkpoint(const std::string& path) {
    TensorFileContent content = read_tensor_file(path);
    json meta = json::parse(content.meta_json);
    if (meta.value("format", "") != "carbideseg-checkpoint")
        throw std::runtime_error("load_checkpoint: not a checkpoint file: " + path);
    UNet<float> net(config_from_json(meta.at("config")), 0);
    for (const auto& t : content.tensors) {
        auto& dst = net.params().value(t.name);
        if (dst.size() != t.data.size())
            throw std::runtime_error("load_checkpoint: shape mismatch for " + t.name);
        dst.data = t.data;
    }
    return net;
}

} // namespace carbideseg::net
