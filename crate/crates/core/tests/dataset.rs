use retkit_core::analysis::{simulate, RoundTripConfig};
use retkit_core::dataset::{read_dataset, write_dataset};
use retkit_core::kinetics::NoiseModel;
use retkit_core::molsys::RigidRotorSpecies;
use retkit_core::reference::ReferenceDataset;

#[test]
fn dataset_files_round_trip_exactly() {
    let table = ReferenceDataset::load().unwrap().theory_table();
    let cfg = RoundTripConfig {
        probe_jmax: 5,
        noise: NoiseModel {
            relative_sigma: 0.01,
            amplitude_jitter: 0.02,
            seed: 9,
        },
        ..Default::default()
    };
    let (data, _) = simulate(&table, &RigidRotorSpecies::co(), 1, &cfg).unwrap();
    let dir = std::env::temp_dir().join(format!("retkit-dataset-{}", std::process::id()));
    let sidecar = write_dataset(&dir, "j1", &data).unwrap();
    let back = read_dataset(&sidecar).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(back, data);
}
