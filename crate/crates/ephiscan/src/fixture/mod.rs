//! Synthetic evidence trees with a manifest of everything planted in them.

pub mod generate;
pub mod manifest;
pub mod spec;
pub mod verify;

pub use generate::{build_fixture, generate_fixture, manifest_path, FixtureError, FixtureTree};
pub use manifest::{FixtureManifest, PlantedRecord};
pub use spec::{FixtureSpec, InvalidSpec, OutputKind};
pub use verify::{verify_scan_against_manifest, Mismatch, Verification};

/// The bundled spec reproducing the documented MyVitals, Gluco-Smart and
/// Health Mate artifacts.
pub const REFERENCE_SPEC: &str = include_str!("../../fixtures/reference-apps.spec");
