#pragma once

#include <cstring>
#include <optional>
#include <string>

#include "sddpm/adam.hpp"
#include "sddpm/unet.hpp"

namespace sddpm {

struct RngState {
    uint64_t seed = 0;
    uint64_t stream_id = 0;
    uint64_t counter = 0;
};

// One entry of the named tensor table. Payload bytes are little-endian floats
// (dtype 0 = f32, 1 = f64); training checkpoints always store f32.
struct NamedTensorRecord {
    std::string name;
    uint8_t dtype = 0;
    std::vector<int64_t> shape;
    std::vector<unsigned char> bytes;
};

struct Checkpoint {
    static constexpr uint32_t kVersion = 1;

    UNetConfig config;
    uint64_t step = 0;
    std::vector<RngState> rng_states;
    bool has_adam = false;
    uint64_t adam_step = 0;
    std::vector<NamedTensorRecord> tensors;

    const NamedTensorRecord* find(const std::string& name) const {
        for (const auto& r : tensors)
            if (r.name == name) return &r;
        return nullptr;
    }
};

// Write-to-temp-then-rename; a crash never leaves a partial checkpoint behind.
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

template <typename T>
NamedTensorRecord record_from_tensor(const std::string& name, const TensorT<T>& t) {
    NamedTensorRecord rec;
    rec.name = name;
    rec.dtype = sizeof(T) == 8 ? 1 : 0;
    rec.shape = t.shape;
    rec.bytes.resize(static_cast<size_t>(t.numel()) * sizeof(T));
    std::memcpy(rec.bytes.data(), t.ptr(), rec.bytes.size());
    return rec;
}

template <typename T>
void tensor_from_record(const NamedTensorRecord& rec, TensorT<T>& out) {
    uint8_t want = sizeof(T) == 8 ? 1 : 0;
    if (rec.dtype != want)
        throw DataError(strfmt("checkpoint tensor %s: dtype %d does not match the requested precision", rec.name.c_str(),
                               static_cast<int>(rec.dtype)));
    if (rec.shape != out.shape)
        throw DataError(strfmt("checkpoint tensor %s: shape %s does not match model shape %s", rec.name.c_str(),
                               shape_str(rec.shape).c_str(), shape_str(out.shape).c_str()));
    std::memcpy(out.ptr(), rec.bytes.data(), rec.bytes.size());
}

// Snapshot of a live model (+ optional optimizer and rng streams).
template <typename T>
Checkpoint make_checkpoint(SpikingUNet<T>& net, uint64_t step, const std::vector<RngState>& rng_states,
                           AdamOptimizer<T>* opt = nullptr) {
    Checkpoint ck;
    ck.config = net.config();
    ck.step = step;
    ck.rng_states = rng_states;
    net.sync_buffers();
    for (auto& e : net.registry()) ck.tensors.push_back(record_from_tensor(e.name, *e.tensor));
    if (opt) {
        ck.has_adam = true;
        ck.adam_step = static_cast<uint64_t>(opt->step_count());
        const auto& params = opt->params();
        auto& states = opt->states();
        for (size_t i = 0; i < params.size(); ++i) {
            ck.tensors.push_back(record_from_tensor("adam.m." + params[i].name, states[i].first_moment));
            ck.tensors.push_back(record_from_tensor("adam.v." + params[i].name, states[i].second_moment));
        }
    }
    return ck;
}

// Restores parameters and buffers; optimizer moments too when given.
template <typename T>
void apply_checkpoint(const Checkpoint& ck, SpikingUNet<T>& net, AdamOptimizer<T>* opt = nullptr) {
    if (!(ck.config == net.config()))
        throw DataError("checkpoint: stored architecture does not match the constructed model");
    for (auto& e : net.registry()) {
        const NamedTensorRecord* rec = ck.find(e.name);
        if (!rec) throw DataError(strfmt("checkpoint: missing tensor %s", e.name.c_str()));
        tensor_from_record(*rec, *e.tensor);
    }
    net.load_buffers();
    if (opt) {
        if (!ck.has_adam) throw DataError("checkpoint: optimizer state requested but absent");
        opt->set_step_count(static_cast<int64_t>(ck.adam_step));
        const auto& params = opt->params();
        auto& states = opt->states();
        for (size_t i = 0; i < params.size(); ++i) {
            const NamedTensorRecord* m = ck.find("adam.m." + params[i].name);
            const NamedTensorRecord* v = ck.find("adam.v." + params[i].name);
            if (!m || !v) throw DataError(strfmt("checkpoint: missing optimizer moments for %s", params[i].name.c_str()));
            tensor_from_record(*m, states[i].first_moment);
            tensor_from_record(*v, states[i].second_moment);
        }
    }
}

}  // namespace sddpm
