//! Benchmark tables.

use evpipe_core::budget::PipelineBudget;
use evpipe_core::saer::{saer_frame_time_us, ClockConfig, InterfacePower, ReadoutInterface};

/// The interface comparison: throughput and host power for USB streaming,
/// an external FPGA bridge and the direct on-chip SAER port, assuming fully
/// populated event frames.
pub fn interface_table_csv() -> String {
    let rows = [
        ("usb", ReadoutInterface::Usb),
        ("saer_fpga", ReadoutInterface::SaerFpga),
        ("saer_soc", ReadoutInterface::SaerSoc { sample_rate_hz: 7200.0 }),
    ];
    let mut out = String::from("module,throughput_efps,power_mw\n");
    for (name, iface) in rows {
        let power = match iface.power() {
            InterfacePower::Milliwatts(mw) => format!("{mw:.3}"),
            InterfacePower::WattClass => ">1000".to_string(),
        };
        out.push_str(&format!("{},{},{}\n", name, iface.throughput_efps().round() as u64, power));
    }
    out
}

/// The closed-loop decomposition: the single-frame readout cost as an
/// informational first row, then the budget stages and their total.
pub fn closed_loop_table_csv(budget: &PipelineBudget, clock: &ClockConfig) -> String {
    let sensing_power = budget
        .stages
        .iter()
        .find(|s| s.parallel_with_compute)
        .map(|s| s.power_mw)
        .unwrap_or_default();
    let single_frame_ms = saer_frame_time_us(clock) / 1000.0;
    let single_frame_energy = single_frame_ms * sensing_power / 1000.0;

    let mut out = String::from("module,latency_ms,power_mw,energy_mj\n");
    out.push_str(&format!(
        "dvs_saer_single_frame,{single_frame_ms:.3},{sensing_power:.3},{single_frame_energy:.4}\n"
    ));
    let body = budget.to_csv();
    out.push_str(body.split_once('\n').map(|(_, rest)| rest).unwrap_or(""));
    out
}
