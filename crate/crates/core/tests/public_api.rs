use dramn::adjacency::{build_adjacency, AdjacencyTensor};
use dramn::dmd::{dmd, DmdConfig};
use dramn::lti::{lti_trajectory, random_spectrum_system};
use dramn::window::TimeSeriesWindow;
use nalgebra::DVector;

fn lti_window(n: usize, seed: u64, perm: Option<&[usize]>) -> TimeSeriesWindow {
    let (a, _) = random_spectrum_system(n, seed);
    let x0 = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
    let rows = lti_trajectory(&a, &x0, 40);
    let rows = match perm {
        None => rows,
        Some(p) => rows.chunks(n).flat_map(|r| p.iter().map(|&j| r[j]).collect::<Vec<_>>()).collect(),
    };
    TimeSeriesWindow::from_rows(rows, n, 1.0, None, 0).unwrap()
}

#[test]
fn lti_window_to_spectrum() {
    let n = 5;
    let (_, truth) = random_spectrum_system(n, 11);
    let res = dmd(&lti_window(n, 11, None), &DmdConfig::with_rank(n)).unwrap();
    assert_eq!(res.r_eff, n);
    for (got, want) in res.eigenvalues.iter().zip(&truth) {
        assert!((got - want).norm() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn relabeling_channels_permutes_the_graph() {
    let n = 5;
    let perm = [3, 0, 4, 1, 2];
    let cfg = DmdConfig::with_rank(n);
    let base = build_adjacency(&lti_window(n, 4, None), &cfg).unwrap();
    let moved = build_adjacency(&lti_window(n, 4, Some(&perm)), &cfg).unwrap();
    let expect = base.permuted(&perm);
    // Layer 2 averages raw mode angles, so it follows each eigenvector's
    // arbitrary phase rather than the channel order.
    for k in [0, 1, 3, 4] {
        let diff = (moved.layer(k) - expect.layer(k)).abs().max();
        assert!(diff < 1e-9, "layer {k} differs by {diff}");
    }
}

#[test]
fn tensors_survive_serialization() {
    let t = build_adjacency(&lti_window(4, 9, None), &DmdConfig::with_rank(4)).unwrap();
    let mut buf = Vec::new();
    t.write_to(&mut buf).unwrap();
    let back = AdjacencyTensor::read_from(&mut buf.as_slice()).unwrap();
    assert_eq!(back, t);
}
