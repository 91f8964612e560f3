#include "sddpm/checkpoint.hpp"

#include <filesystem>
#include <fstream>

namespace sddpm {

namespace {

constexpr char kMagic[4] = {'S', 'D', 'P', 'M'};

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_i64(std::string& out, int64_t v) { put_u64(out, static_cast<uint64_t>(v)); }
void put_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}
void put_str(std::string& out, const std::string& s) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    out.append(s);
}

class Reader {
  public:
    Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + static_cast<size_t>(i)])) << (8 * i);
        pos_ += 4;
        return v;
    }
    uint64_t u64(const char* what) {
        need(8, what);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<size_t>(i)])) << (8 * i);
        pos_ += 8;
        return v;
    }
    int64_t i64(const char* what) { return static_cast<int64_t>(u64(what)); }
    double f64(const char* what) {
        uint64_t bits = u64(what);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<uint8_t>(data_[pos_++]);
    }
    std::string str(const char* what) {
        uint32_t len = u32(what);
        need(len, what);
        std::string s = data_.substr(pos_, len);
        pos_ += len;
        return s;
    }
    std::vector<unsigned char> blob(size_t len, const std::string& what) {
        need(len, what.c_str());
        std::vector<unsigned char> out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                       data_.begin() + static_cast<std::ptrdiff_t>(pos_ + len));
        pos_ += len;
        return out;
    }

  private:
    void need(size_t n, const char* what) {
        if (pos_ + n > data_.size())
            throw DataError(strfmt("%s: truncated checkpoint while reading %s", path_.c_str(), what));
    }
    std::string data_;
    std::string path_;
    size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, Checkpoint::kVersion);

    const UNetConfig& c = ck.config;
    put_i64(out, c.in_channels);
    put_i64(out, c.image_size);
    put_i64(out, c.base_channels);
    put_u32(out, static_cast<uint32_t>(c.ch_mult.size()));
    for (int64_t m : c.ch_mult) put_i64(out, m);
    put_i64(out, c.blocks_per_level);
    put_i64(out, c.t_steps);
    put_i64(out, c.temb_dim);
    put_f64(out, c.lif_decay);
    put_f64(out, c.lif_v_th);
    put_f64(out, c.lif_surrogate_alpha);

    put_u64(out, ck.step);
    put_u32(out, static_cast<uint32_t>(ck.rng_states.size()));
    for (const auto& r : ck.rng_states) {
        put_u64(out, r.seed);
        put_u64(out, r.stream_id);
        put_u64(out, r.counter);
    }
    out.push_back(ck.has_adam ? 1 : 0);
    put_u64(out, ck.adam_step);

    put_u32(out, static_cast<uint32_t>(ck.tensors.size()));
    for (const auto& t : ck.tensors) {
        put_str(out, t.name);
        out.push_back(static_cast<char>(t.dtype));
        put_u32(out, static_cast<uint32_t>(t.shape.size()));
        for (int64_t d : t.shape) put_i64(out, d);
        out.append(reinterpret_cast<const char*>(t.bytes.data()), t.bytes.size());
    }

    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError(strfmt("%s: cannot open for writing", tmp.string().c_str()));
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw DataError(strfmt("%s: write failed", tmp.string().c_str()));
    }
    std::filesystem::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(strfmt("%s: cannot open", path.c_str()));
    std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path);

    std::vector<unsigned char> magic = r.blob(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0)
        throw DataError(strfmt("%s: bad checkpoint magic (expected \"SDPM\")", path.c_str()));
    uint32_t version = r.u32("version");
    if (version != Checkpoint::kVersion)
        throw DataError(strfmt("%s: unsupported checkpoint version %u (expected %u)", path.c_str(), version,
                               Checkpoint::kVersion));

    Checkpoint ck;
    UNetConfig& c = ck.config;
    c.in_channels = r.i64("config.in_channels");
    c.image_size = r.i64("config.image_size");
    c.base_channels = r.i64("config.base_channels");
    uint32_t nmult = r.u32("config.ch_mult count");
    c.ch_mult.clear();
    for (uint32_t i = 0; i < nmult; ++i) c.ch_mult.push_back(r.i64("config.ch_mult"));
    c.blocks_per_level = r.i64("config.blocks_per_level");
    c.t_steps = r.i64("config.t_steps");
    c.temb_dim = r.i64("config.temb_dim");
    c.lif_decay = r.f64("config.lif_decay");
    c.lif_v_th = r.f64("config.lif_v_th");
    c.lif_surrogate_alpha = r.f64("config.lif_surrogate_alpha");

    ck.step = r.u64("step");
    uint32_t nrng = r.u32("rng stream count");
    for (uint32_t i = 0; i < nrng; ++i) {
        RngState s;
        s.seed = r.u64("rng.seed");
        s.stream_id = r.u64("rng.stream_id");
        s.counter = r.u64("rng.counter");
        ck.rng_states.push_back(s);
    }
    ck.has_adam = r.u8("adam flag") != 0;
    ck.adam_step = r.u64("adam step");

    uint32_t ntensors = r.u32("tensor count");
    for (uint32_t i = 0; i < ntensors; ++i) {
        NamedTensorRecord rec;
        rec.name = r.str("tensor name");
        rec.dtype = r.u8((rec.name + " dtype").c_str());
        if (rec.dtype > 1)
            throw DataError(strfmt("%s: tensor %s has unknown dtype %d", path.c_str(), rec.name.c_str(),
                                   static_cast<int>(rec.dtype)));
        uint32_t ndim = r.u32((rec.name + " ndim").c_str());
        int64_t numel = 1;
        for (uint32_t d = 0; d < ndim; ++d) {
            int64_t dim = r.i64((rec.name + " dims").c_str());
            if (dim < 0) throw DataError(strfmt("%s: tensor %s has negative dim", path.c_str(), rec.name.c_str()));
            rec.shape.push_back(dim);
            numel *= dim;
        }
        size_t elem = rec.dtype == 1 ? 8 : 4;
        rec.bytes = r.blob(static_cast<size_t>(numel) * elem, "tensor " + rec.name + " payload");
        ck.tensors.push_back(std::move(rec));
    }
    return ck;
}

}  // namespace sddpm
