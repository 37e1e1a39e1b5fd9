//! Shared fixtures for the solver benchmarks: one reference device, its
//! derived rates, and ready-made generators, so every benchmark times the
//! same workload.

use qdpc_core::{derive_rates, DerivedRates, DeviceParams, Generator, ModelKind};

/// The reference stacked-dot device (library defaults).
pub fn reference_params() -> DeviceParams {
    DeviceParams::default()
}

/// Derived rates of the reference device.
pub fn reference_rates() -> DerivedRates {
    derive_rates(&reference_params()).expect("reference device is valid")
}

/// Generator of the requested model variant for the reference device.
pub fn generator(kind: ModelKind) -> Generator {
    Generator::new(kind, &reference_rates())
}
