use std::path::PathBuf;

use crate::store::{load_dataset, InstanceStore};

pub fn fixture(name: &str) -> InstanceStore {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../datasets").join(name);
    load_dataset(&dir).expect("fixture loads")
}
