#![allow(dead_code)]

pub mod wf_oracle;

use dris_core::channel::{
    build_profile, CorrelationParams, CorrelationProfile, Link, LinkStats, NodeGeometry, SystemDims,
};
use dris_core::linalg;

/// Reference-geometry correlations with every gain set to `0.5 / L`, so that
/// unit noise gives rates of a few nats.
pub fn normalized_correlated(m: usize, n: usize, l: usize) -> CorrelationProfile {
    normalized_with_spacing(m, n, l, 0.5)
}

/// As [`normalized_correlated`] with RIS element spacing in wavelengths.
pub fn normalized_with_spacing(m: usize, n: usize, l: usize, spacing: f64) -> CorrelationProfile {
    let d = SystemDims::new(m, n, l, l).unwrap();
    let mut geo = NodeGeometry::reference(&d);
    geo.ris1.spacing = spacing * geo.wavelength;
    geo.ris2.spacing = spacing * geo.wavelength;
    let p = build_profile(&geo, &d, &CorrelationParams::default()).unwrap();
    Link::ALL.iter().fold(p, |acc, &link| acc.with_gain(link, 0.5 / l as f64))
}

/// Correlated profile whose surface-side transmit correlations (`T1`, `T2`,
/// `Ts`) are replaced by scaled identities of equal trace: every phase
/// configuration gives the same rate, while the BS side stays correlated.
pub fn phase_invariant(m: usize, n: usize, l: usize) -> CorrelationProfile {
    let p = normalized_correlated(m, n, l);
    let d = *p.dims();
    let mut links = p.links().clone();
    for link in [Link::Ris1User, Link::Ris2User, Link::InterRis] {
        let stats = p.link(link);
        let t = link.transmit_dim(&d);
        let scale = linalg::trace(&stats.transmit).re / t as f64;
        links[link.index()] = LinkStats {
            transmit: linalg::identity(t).scale(scale),
            ..stats.clone()
        };
    }
    CorrelationProfile::new(d, links).unwrap()
}
