//! Palais–Smale bubbling diagnostic: lump detection, tracking across
//! snapshots, and the energy splitting of the last snapshot.

use serde::Serialize;

use crate::energy::energy_iinf;
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::params::ProblemParams;
use crate::reduce::pairwise_sum;

/// Lumps are connected sets where `u² ≥ LUMP_FLOOR · max u²`.
pub const LUMP_FLOOR: f64 = 1e-4;
/// A track escapes when its displacement grows at every snapshot and ends
/// above this many cells.
pub const ESCAPE_DRIFT_CELLS: f64 = 5.0;
/// Localization radius in lump widths.
pub const WINDOW_WIDTHS: f64 = 4.0;
pub const MIN_SNAPSHOTS: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct Lump {
    pub center: Vec<f64>,
    /// `∫ u²` over the lump.
    pub mass: f64,
    /// RMS radius of `u²` about the centre.
    pub width: f64,
    pub peak: f64,
}

/// Minimal-image displacement `b - a` on the torus.
fn periodic_delta(spec: &GridSpec, a: &[f64], b: &[f64]) -> Vec<f64> {
    let period = 2.0 * spec.half_extent();
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = y - x;
            d - period * (d / period).round()
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn wrap(spec: &GridSpec, x: f64) -> f64 {
    let l = spec.half_extent();
    (x + l).rem_euclid(2.0 * l) - l
}

fn neighbours(spec: &GridSpec, i: usize) -> Vec<usize> {
    let m = spec.points_per_dim();
    let idx = spec.unflatten(i);
    let mut out = Vec::with_capacity(4);
    for a in 0..spec.dim() {
        for step in [1, m - 1] {
            let mut j = idx;
            j[a] = (j[a] + step) % m;
            out.push(spec.flatten(j));
        }
    }
    out
}

/// Connected components of `{u² ≥ LUMP_FLOOR · max u²}` (periodic, axis
/// neighbours), ordered by decreasing mass.
pub fn find_lumps(u: &Field) -> Vec<Lump> {
    let spec = *u.spec();
    let dim = spec.dim();
    let density: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    let top = density.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return Vec::new();
    }
    let floor = LUMP_FLOOR * top;
    let mut seen = vec![false; density.len()];
    let mut lumps = Vec::new();
    for start in 0..density.len() {
        if seen[start] || density[start] < floor {
            continue;
        }
        let mut members = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in neighbours(&spec, i) {
                if !seen[j] && density[j] >= floor {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        let peak_node = *members
            .iter()
            .max_by(|&&a, &&b| density[a].total_cmp(&density[b]).then(b.cmp(&a)))
            .expect("non-empty component");
        let anchor = &spec.point(peak_node)[..dim];
        let deltas: Vec<Vec<f64>> = members
            .iter()
            .map(|&i| periodic_delta(&spec, anchor, &spec.point(i)[..dim]))
            .collect();
        let weights: Vec<f64> = members.iter().map(|&i| density[i]).collect();
        let total = pairwise_sum(&weights);
        let offset: Vec<f64> = (0..dim)
            .map(|a| {
                pairwise_sum(&deltas.iter().zip(&weights).map(|(d, w)| d[a] * w).collect::<Vec<_>>())
                    / total
            })
            .collect();
        let spread = pairwise_sum(
            &deltas
                .iter()
                .zip(&weights)
                .map(|(d, w)| {
                    let e: Vec<f64> = d.iter().zip(&offset).map(|(x, o)| x - o).collect();
                    w * e.iter().map(|x| x * x).sum::<f64>()
                })
                .collect::<Vec<_>>(),
        ) / total;
        lumps.push(Lump {
            center: anchor.iter().zip(&offset).map(|(x, o)| wrap(&spec, x + o)).collect(),
            mass: total * spec.cell_volume(),
            width: spread.sqrt(),
            peak: density[peak_node].sqrt(),
        });
    }
    lumps.sort_by(|a, b| b.mass.total_cmp(&a.mass));
    lumps
}

#[derive(Debug, Clone, Serialize)]
pub struct Track {
    /// Snapshot index where the track starts.
    pub first: usize,
    pub centers: Vec<Vec<f64>>,
    /// Width of the lump in the latest snapshot.
    pub width: f64,
    /// Displacement from the first centre at the latest snapshot.
    pub drift: f64,
    pub escaping: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BubbleReport {
    /// Number of escaping lumps.
    pub k: usize,
    /// Trajectories `x_n^i` of the escaping lumps.
    pub centers: Vec<Vec<Vec<f64>>>,
    /// `I∞` of each escaping lump, localized on its window in the last snapshot.
    pub energies: Vec<f64>,
    /// `I∞(u⁰)` with the escaping windows removed.
    pub base_energy: f64,
    /// `I∞` of the last snapshot.
    pub total_energy: f64,
    /// `|I∞(u_n) - I∞(u⁰) - Σ I∞(u^i)|`.
    pub splitting_defect: f64,
    /// Defect divided by `|total_energy|`.
    pub relative_defect: f64,
    pub tracks: Vec<Track>,
}

fn window(u: &Field, center: &[f64], radius: f64) -> Field {
    let spec = *u.spec();
    let dim = spec.dim();
    Field::from_fn(spec, |x| {
        if norm(&periodic_delta(&spec, center, &x[..dim])) < radius {
            1.0
        } else {
            0.0
        }
    })
    .zip_map(u, |w, v| w * v)
    .expect("same grid")
}

/// Tracks lumps across `snapshots` (in iteration order) and splits the energy
/// of the last one into escaping bubbles and the remainder.
pub fn ps_diagnostics(snapshots: &[Field], params: &ProblemParams) -> Result<BubbleReport> {
    if snapshots.len() < MIN_SNAPSHOTS {
        return Err(Error::TooFewSnapshots {
            needed: MIN_SNAPSHOTS,
            got: snapshots.len(),
        });
    }
    let spec = *snapshots[0].spec();
    for s in snapshots {
        s.check_same_grid(&snapshots[0])?;
    }
    let h = spec.spacing();
    // (track, alive)
    let mut tracks: Vec<(Track, bool)> = Vec::new();
    for (n, snap) in snapshots.iter().enumerate() {
        let lumps = find_lumps(snap);
        let mut pairs = Vec::new();
        for (t, (track, alive)) in tracks.iter().enumerate() {
            if !alive {
                continue;
            }
            let last = track.centers.last().expect("tracks are never empty");
            for (l, lump) in lumps.iter().enumerate() {
                pairs.push((norm(&periodic_delta(&spec, last, &lump.center)), t, l));
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_used = vec![false; tracks.len()];
        let mut lump_used = vec![false; lumps.len()];
        for (_, t, l) in pairs {
            if track_used[t] || lump_used[l] {
                continue;
            }
            track_used[t] = true;
            lump_used[l] = true;
            tracks[t].0.centers.push(lumps[l].center.clone());
            tracks[t].0.width = lumps[l].width;
        }
        for (t, used) in track_used.iter().enumerate() {
            if !used {
                tracks[t].1 = false;
            }
        }
        for (l, lump) in lumps.iter().enumerate() {
            if !lump_used[l] {
                tracks.push((
                    Track {
                        first: n,
                        centers: vec![lump.center.clone()],
                        width: lump.width,
                        drift: 0.0,
                        escaping: false,
                    },
                    true,
                ));
            }
        }
    }
    let last_index = snapshots.len() - 1;
    let mut tracks: Vec<Track> = tracks
        .into_iter()
        .map(|(mut track, alive)| {
            let origin = track.centers[0].clone();
            let displacement: Vec<f64> = track
                .centers
                .iter()
                .map(|c| norm(&periodic_delta(&spec, &origin, c)))
                .collect();
            track.drift = *displacement.last().expect("non-empty");
            track.escaping = alive
                && track.first + track.centers.len() - 1 == last_index
                && track.centers.len() >= MIN_SNAPSHOTS
                && displacement.windows(2).all(|w| w[1] > w[0])
                && track.drift > ESCAPE_DRIFT_CELLS * h;
            track
        })
        .collect();
    tracks.sort_by(|a, b| a.first.cmp(&b.first));

    let last = &snapshots[last_index];
    let mut base = last.clone();
    let mut energies = Vec::new();
    let mut centers = Vec::new();
    for track in tracks.iter().filter(|t| t.escaping) {
        let c = track.centers.last().expect("non-empty");
        let piece = window(last, c, WINDOW_WIDTHS * track.width);
        energies.push(energy_iinf(&piece, params)?);
        base = base.axpy(-1.0, &piece)?;
        centers.push(track.centers.clone());
    }
    let base_energy = energy_iinf(&base, params)?;
    let total_energy = energy_iinf(last, params)?;
    let splitting_defect = (total_energy - base_energy - energies.iter().sum::<f64>()).abs();
    Ok(BubbleReport {
        k: energies.len(),
        centers,
        energies,
        base_energy,
        total_energy,
        splitting_defect,
        relative_defect: splitting_defect / total_energy.abs().max(f64::MIN_POSITIVE),
        tracks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn bump(spec: GridSpec, c: [f64; 2], amp: f64) -> Field {
        Field::from_fn(spec, |x| amp * (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2))).exp())
    }

    fn params() -> ProblemParams {
        ProblemParams::planar(0.5, 3.0, 1.0, 8.0)
    }

    #[test]
    fn two_lumps_found_heaviest_first() {
        let g = make_grid(2, 16.0, 64).unwrap();
        let u = bump(g, [-6.0, 0.0], 1.0).axpy(1.0, &bump(g, [6.0, 2.0], 2.0)).unwrap();
        let lumps = find_lumps(&u);
        assert_eq!(lumps.len(), 2);
        assert!((lumps[0].center[0] - 6.0).abs() < 1e-6 && (lumps[0].center[1] - 2.0).abs() < 1e-6);
        assert!((lumps[1].center[0] + 6.0).abs() < 1e-6);
        assert!(lumps[0].mass > lumps[1].mass);
    }

    #[test]
    fn lump_straddling_the_seam_is_one_component() {
        let g = make_grid(2, 8.0, 32).unwrap();
        let u = Field::from_fn(g, |x| {
            let dx = (x[0] - 8.0).rem_euclid(16.0).min((8.0 - x[0]).rem_euclid(16.0));
            (-(dx * dx + x[1] * x[1])).exp()
        });
        let lumps = find_lumps(&u);
        assert_eq!(lumps.len(), 1);
        assert!((lumps[0].center[0].abs() - 8.0).abs() < 1e-6);
    }

    #[test]
    fn moving_bump_is_one_escaping_bubble() {
        let g = make_grid(2, 16.0, 64).unwrap();
        let still = bump(g, [-10.0, 0.0], 1.0);
        let snaps: Vec<Field> = (0..5)
            .map(|n| still.axpy(1.0, &bump(g, [2.0 * n as f64 - 2.0, 5.0], 1.0)).unwrap())
            .collect();
        let r = ps_diagnostics(&snaps, &params()).unwrap();
        assert_eq!(r.k, 1);
        assert_eq!(r.centers[0].len(), 5);
        assert!(r.relative_defect < 1e-2, "{}", r.relative_defect);
        assert!(r.tracks.iter().filter(|t| !t.escaping).count() == 1);
    }

    #[test]
    fn stationary_snapshots_have_no_bubbles() {
        let g = make_grid(2, 8.0, 32).unwrap();
        let snaps = vec![bump(g, [0.0, 0.0], 1.0); 4];
        let r = ps_diagnostics(&snaps, &params()).unwrap();
        assert_eq!(r.k, 0);
        assert!(r.splitting_defect < 1e-12);
    }

    #[test]
    fn too_few_snapshots() {
        let g = make_grid(2, 8.0, 32).unwrap();
        let snaps = vec![bump(g, [0.0, 0.0], 1.0); 2];
        assert!(matches!(
            ps_diagnostics(&snaps, &params()),
            Err(Error::TooFewSnapshots { needed: 3, got: 2 })
        ));
    }
}
