#pragma once

#include <iosfwd>

#include "sddpm/diffusion.hpp"
#include "sddpm/unet.hpp"

namespace sddpm {

// 45nm CMOS per-operation estimates, overridable from the run config.
struct EnergyConstants {
    double e_mac_pj = 4.6;
    double e_ac_pj = 0.9;
};

struct EnergyRow {
    std::string name;
    int64_t macs = 0;      // per image, per time step
    double rate = 1.0;     // firing rate of the feeding spike train (spike rows)
    double sops = 0.0;     // rate * T * macs (spike rows)
    double energy_pj = 0.0;
    std::string basis;     // how the row is charged
};

struct EnergyReport {
    std::string mode;  // "snn" | "ann"
    int64_t t_steps = 1;
    EnergyConstants constants;
    std::vector<EnergyRow> rows;
    double total_pj = 0.0;
    // BN and elementwise adds are excluded from the totals and reported
    // separately (element counts per image per time step).
    int64_t bn_element_ops = 0;
    int64_t add_element_ops = 0;

    double total_mj() const { return total_pj * 1e-9; }
};

// MAC-equivalent op counts per layer for a given architecture.
std::vector<LayerDesc> count_ops(const UNetConfig& cfg);

struct AuxOpCounts {
    int64_t bn_elements = 0;
    int64_t add_elements = 0;
};
AuxOpCounts count_aux_ops(const UNetConfig& cfg);

// Energy accounting:
//   encoding conv     T * MACs * E_MAC   (analog input replicated T times)
//   spiking conv      rate * T * MACs * E_AC
//   analog, per step  T * MACs * E_MAC   (shortcut projections)
//   analog, once      MACs * E_MAC       (decode conv, time-embedding MLP)
// ANN mode charges every layer MACs * E_MAC with no time axis.
EnergyReport energy_report_snn(const std::vector<LayerDesc>& counts,
                               const std::vector<std::pair<std::string, double>>& rates, int64_t t_steps,
                               const EnergyConstants& constants);
EnergyReport energy_report_ann(const std::vector<LayerDesc>& counts, const EnergyConstants& constants);

void write_energy_text(const EnergyReport& report, std::ostream& os);
void write_energy_csv_header(std::ostream& os);
void write_energy_csv(const EnergyReport& report, std::ostream& os);

// Mean spike value per spiking layer over a probe batch pushed through the
// forward pass at per-example random diffusion steps.
template <typename T>
std::vector<std::pair<std::string, double>> measure_firing_rates(SpikingUNet<T>& net, const TensorT<T>& x0_batch,
                                                                 const NoiseSchedule& sched, RngStream& rng) {
    DsmDraw<T> draw = dsm_draw<T>(x0_batch.shape, sched, rng);
    TensorT<T> xt = q_sample_batch(x0_batch, draw, sched);
    ForwardOptions opts;
    opts.training = false;
    opts.collect_rates = true;
    net.forward(xt, draw.ts, opts);
    return net.firing_rates();
}

}  // namespace sddpm
