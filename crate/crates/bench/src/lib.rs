// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the benchmarks.

use std::collections::BTreeMap;
use std::sync::Arc;

use rdslab::flows::{builtin_sde, SdeSystem};
use rdslab::space::builtin_map;
use rdslab::TransitionKernel;

pub fn additive(map: &str, eps: f64) -> Arc<TransitionKernel> {
    let m = builtin_map(map, &BTreeMap::new()).expect("builtin map");
    Arc::new(TransitionKernel::additive(m, eps).expect("valid eps"))
}

pub fn ou(eps: f64, dt: f64, horizon: f64) -> SdeSystem {
    builtin_sde("ou", &BTreeMap::new(), eps, dt, horizon).expect("builtin sde")
}
