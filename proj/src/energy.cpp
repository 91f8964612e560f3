#include "sddpm/energy.hpp"

#include <algorithm>
#include <map>
#include <ostream>

namespace sddpm {

std::vector<LayerDesc> count_ops(const UNetConfig& cfg) {
    SpikingUNet<float> net(cfg);
    return net.describe();
}

AuxOpCounts count_aux_ops(const UNetConfig& cfg) {
    AuxOpCounts aux;
    int64_t levels = cfg.levels();
    auto bn = [&](int64_t c, int64_t size) { aux.bn_elements += c * size * size; };
    auto block = [&](int64_t c, int64_t size) {
        bn(c, size);
        bn(c, size);
        // two residual sums plus the broadcast time-embedding bias
        aux.add_elements += 3 * c * size * size;
    };
    int64_t size = cfg.image_size;
    bn(cfg.channels_at(0), size);
    for (int64_t l = 0; l < levels; ++l) {
        for (int64_t k = 0; k < cfg.blocks_per_level; ++k) block(cfg.channels_at(l), size);
        if (l + 1 < levels) {
            size /= 2;
            bn(cfg.channels_at(l), size);
        }
    }
    block(cfg.channels_at(levels - 1), size);
    block(cfg.channels_at(levels - 1), size);
    for (int64_t l = levels - 1; l >= 0; --l) {
        for (int64_t k = 0; k < cfg.blocks_per_level; ++k) block(cfg.channels_at(l), size);
        if (l > 0) {
            size *= 2;
            bn(cfg.channels_at(l - 1), size);
        }
    }
    // decode: accumulation of the final spike train into the time mean
    aux.add_elements += cfg.channels_at(0) * size * size;
    return aux;
}

EnergyReport energy_report_snn(const std::vector<LayerDesc>& counts,
                               const std::vector<std::pair<std::string, double>>& rates, int64_t t_steps,
                               const EnergyConstants& constants) {
    std::map<std::string, double> rate_map(rates.begin(), rates.end());
    for (const auto& [name, r] : rate_map)
        check_arg(r >= 0.0 && r <= 1.0, strfmt("energy: firing rate %g for %s outside [0,1]", r, name.c_str()));
    EnergyReport rep;
    rep.mode = "snn";
    rep.t_steps = t_steps;
    rep.constants = constants;
    double td = static_cast<double>(t_steps);
    for (const auto& layer : counts) {
        EnergyRow row;
        row.name = layer.name;
        row.macs = layer.macs;
        double macs = static_cast<double>(layer.macs);
        switch (layer.cost) {
            case LayerDesc::Cost::Encode:
                row.energy_pj = td * macs * constants.e_mac_pj;
                row.basis = "mac x T";
                break;
            case LayerDesc::Cost::Spike: {
                auto it = rate_map.find(layer.rate_source);
                if (it == rate_map.end())
                    throw std::invalid_argument(
                        strfmt("energy: no firing rate for layer %s (source %s)", layer.name.c_str(),
                               layer.rate_source.c_str()));
                row.rate = it->second;
                row.sops = row.rate * td * macs;
                row.energy_pj = row.sops * constants.e_ac_pj;
                row.basis = "ac x sops";
                break;
            }
            case LayerDesc::Cost::AnalogPerStep:
                row.energy_pj = td * macs * constants.e_mac_pj;
                row.basis = "mac x T";
                break;
            case LayerDesc::Cost::AnalogOnce:
                row.energy_pj = macs * constants.e_mac_pj;
                row.basis = "mac";
                break;
        }
        rep.total_pj += row.energy_pj;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

EnergyReport energy_report_ann(const std::vector<LayerDesc>& counts, const EnergyConstants& constants) {
    EnergyReport rep;
    rep.mode = "ann";
    rep.t_steps = 1;
    rep.constants = constants;
    for (const auto& layer : counts) {
        EnergyRow row;
        row.name = layer.name;
        row.macs = layer.macs;
        row.energy_pj = static_cast<double>(layer.macs) * constants.e_mac_pj;
        row.basis = "mac";
        rep.total_pj += row.energy_pj;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

void write_energy_text(const EnergyReport& report, std::ostream& os) {
    os << "mode: " << report.mode << "  T=" << report.t_steps << "  E_MAC=" << report.constants.e_mac_pj
       << " pJ  E_AC=" << report.constants.e_ac_pj << " pJ\n";
    os << strfmt("%-24s %12s %8s %14s %16s  %s\n", "layer", "macs", "rate", "sops", "energy_pj", "basis");
    for (const auto& r : report.rows) {
        os << strfmt("%-24s %12lld %8.4f %14.1f %16.3f  %s\n", r.name.c_str(), static_cast<long long>(r.macs), r.rate,
                     r.sops, r.energy_pj, r.basis.c_str());
    }
    os << strfmt("total: %.3f pJ (%.9f mJ) per generated image per network pass\n", report.total_pj, report.total_mj());
    if (report.bn_element_ops > 0 || report.add_element_ops > 0) {
        os << strfmt("excluded from totals: batch-norm elements %lld, elementwise-add elements %lld (per image per step)\n",
                     static_cast<long long>(report.bn_element_ops), static_cast<long long>(report.add_element_ops));
    }
}

void write_energy_csv_header(std::ostream& os) { os << "mode,layer,macs,rate,sops,energy_pj,basis\n"; }

void write_energy_csv(const EnergyReport& report, std::ostream& os) {
    for (const auto& r : report.rows) {
        os << report.mode << "," << r.name << "," << r.macs << "," << strfmt("%.6f", r.rate) << ","
           << strfmt("%.3f", r.sops) << "," << strfmt("%.6f", r.energy_pj) << "," << r.basis << "\n";
    }
    os << report.mode << ",total,,,," << strfmt("%.6f", report.total_pj) << ",\n";
}

}  // namespace sddpm
