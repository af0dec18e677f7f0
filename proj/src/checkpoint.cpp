#include "hc/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hc {

namespace {

constexpr char kMagic[4] = {'H', 'C', 'C', 'K'};

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f, const char* what) {
    T v;
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!f) throw std::runtime_error(std::string("checkpoint: truncated reading ") + what);
    return v;
}

}  // namespace

void save_tensors(const std::vector<NamedTensorD>& tensors, const std::string& path,
                  const std::string& config_blob) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot write " + path);
    f.write(kMagic, 4);
    put<std::uint32_t>(f, 1);
    put<std::uint32_t>(f, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        put<std::uint32_t>(f, static_cast<std::uint32_t>(t.name.size()));
        f.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put<std::uint8_t>(f, t.side);
        put<std::uint8_t>(f, static_cast<std::uint8_t>(t.data.rank()));
        for (int d : t.data.shape) put<std::int32_t>(f, d);
        f.write(reinterpret_cast<const char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.numel() * sizeof(double)));
    }
    put<std::uint32_t>(f, static_cast<std::uint32_t>(config_blob.size()));
    f.write(config_blob.data(), static_cast<std::streamsize>(config_blob.size()));
    if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

std::vector<NamedTensorD> load_tensors(const std::string& path, std::string* config_blob) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    const auto version = get<std::uint32_t>(f, "version");
    if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
    const auto count = get<std::uint32_t>(f, "tensor count");
    std::vector<NamedTensorD> out(count);
    for (auto& t : out) {
        const auto len = get<std::uint32_t>(f, "name length");
        t.name.resize(len);
        f.read(t.name.data(), len);
        t.side = get<std::uint8_t>(f, "side flag");
        const int rank = get<std::uint8_t>(f, "rank");
        std::vector<int> shape(rank);
        for (auto& d : shape) d = get<std::int32_t>(f, "extent");
        t.data = Tensor<double>(shape);
        f.read(reinterpret_cast<char*>(t.data.data()),
               static_cast<std::streamsize>(t.data.numel() * sizeof(double)));
        if (!f) throw std::runtime_error("checkpoint: truncated reading tensor " + t.name);
    }
    const auto blob_len = get<std::uint32_t>(f, "config length");
    std::string blob(blob_len, '\0');
    f.read(blob.data(), blob_len);
    if (!f) throw std::runtime_error("checkpoint: truncated reading config blob");
    if (config_blob) *config_blob = blob;
    return out;
}

template <typename T>
void save_params(const ModelParams<T>& params, const std::string& path, const std::string& config_blob) {
    std::vector<NamedTensorD> tensors;
    for (const auto* p : params.all()) {
        NamedTensorD t;
        t.name = p->name;
        t.side = p->fine_side ? 1 : 0;
        t.data = Tensor<double>(p->value.shape);
        for (std::size_t i = 0; i < p->value.numel(); ++i) t.data.v[i] = static_cast<double>(p->value.v[i]);
        tensors.push_back(std::move(t));
    }
    save_tensors(tensors, path, config_blob);
}

template <typename T>
void load_params(ModelParams<T>& params, const std::string& path, std::string* config_blob) {
    const auto tensors = load_tensors(path, config_blob);
    for (const auto& t : tensors) {
        ParamTensor<T>* p = params.find(t.name);
        if (!p) continue;  // container may hold more than one model's tensors
        if (p->value.shape != t.data.shape)
            throw std::runtime_error("checkpoint: shape mismatch for " + t.name + ": model " +
                                     p->value.shape_str() + " vs file " + t.data.shape_str());
        for (std::size_t i = 0; i < t.data.numel(); ++i) p->value.v[i] = static_cast<T>(t.data.v[i]);
    }
    for (const auto* p : params.all()) {
        bool found = false;
        for (const auto& t : tensors)
            if (t.name == p->name) { found = true; break; }
        if (!found) throw std::runtime_error("checkpoint: missing tensor " + p->name + " in " + path);
    }
}

template void save_params<float>(const ModelParams<float>&, const std::string&, const std::string&);
template void save_params<double>(const ModelParams<double>&, const std::string&, const std::string&);
template void load_params<float>(ModelParams<float>&, const std::string&, std::string*);
template void load_params<double>(ModelParams<double>&, const std::string&, std::string*);

}  // namespace hc
