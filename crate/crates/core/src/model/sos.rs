//! Special ordered sets and their logarithmic binary encodings.

use super::ir::{ModelIR, Sense, SosKind, Tag, VarKind};

/// Number of bits needed to address `m` members, `⌈log₂ m⌉`.
pub fn log2_ceil(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

/// Declare `{vars} ∈ SOS1` and add its encoding with `⌈log₂ m⌉` binaries.
///
/// Member `j` (0-based) may be nonzero only when the bit pattern equals the
/// complement of `j`: for every bit `b`, a zero bit of `j` gives
/// `x_j ≤ 𝕀_b` and a one bit gives `x_j ≤ 1 − 𝕀_b`.
///
/// Returns the index of the declared set.
pub fn encode_sos1(model: &mut ModelIR, name: &str, vars: &[usize], tag: Tag) -> usize {
    assert!(!vars.is_empty(), "SOS1 needs at least one member");
    let set = model.sos(name, SosKind::Sos1, vars.to_vec(), tag);
    let (v0, r0) = (model.variables.len(), model.linear_constraints.len());
    let bits: Vec<usize> = (0..log2_ceil(vars.len()))
        .map(|b| {
            model.add_var(
                super::names::sos_bit(name, b),
                VarKind::Binary,
                0.0,
                1.0,
                tag,
            )
        })
        .collect();
    for (j, &x) in vars.iter().enumerate() {
        for (b, &ib) in bits.iter().enumerate() {
            if j & (1 << b) == 0 {
                model.linear(
                    format!("{name}_m{j}_b{b}"),
                    vec![(x, 1.0), (ib, -1.0)],
                    Sense::Le,
                    0.0,
                    tag,
                );
            } else {
                model.linear(
                    format!("{name}_m{j}_b{b}"),
                    vec![(x, 1.0), (ib, 1.0)],
                    Sense::Le,
                    1.0,
                    tag,
                );
            }
        }
    }
    model.mark_encoding(set, v0, r0);
    set
}

/// Declare `{lambdas} ∈ SOS2` and add its encoding: continuous
/// `λ̄_0..λ̄_{m-2}` in an SOS1 set (itself encoded), and
/// `λ_i ≤ λ̄_{i−1} + λ̄_i` with `λ̄_{−1} = λ̄_{m−1} = 0`.
pub fn encode_sos2(model: &mut ModelIR, name: &str, lambdas: &[usize], tag: Tag) -> usize {
    assert!(lambdas.len() >= 2, "SOS2 needs at least two members");
    let set = model.sos(name, SosKind::Sos2, lambdas.to_vec(), tag);
    let (v0, r0) = (model.variables.len(), model.linear_constraints.len());
    let segments = lambdas.len() - 1;
    let bars: Vec<usize> = (0..segments)
        .map(|s| {
            model.add_var(
                super::names::sos_bar(name, s),
                VarKind::Continuous,
                0.0,
                1.0,
                tag,
            )
        })
        .collect();
    for (i, &l) in lambdas.iter().enumerate() {
        let mut terms = vec![(l, 1.0)];
        if i >= 1 {
            terms.push((bars[i - 1], -1.0));
        }
        if i < segments {
            terms.push((bars[i], -1.0));
        }
        model.linear(format!("{name}_adj{i}"), terms, Sense::Le, 0.0, tag);
    }
    // the inner SOS1 set and its bits belong to the outer encoding too
    encode_sos1(model, &format!("{name}_bar"), &bars, tag);
    for v in &mut model.variables[v0..] {
        v.encodes = Some(set);
    }
    for c in &mut model.linear_constraints[r0..] {
        c.encodes = Some(set);
    }
    set
}

/// Whether values satisfy the SOS condition directly, treating entries
/// with `|x| ≤ tol` as zero.
pub fn sos_satisfied(kind: SosKind, values: &[f64], tol: f64) -> bool {
    let nz: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol)
        .map(|(i, _)| i)
        .collect();
    match kind {
        SosKind::Sos1 => nz.len() <= 1,
        SosKind::Sos2 => nz.len() <= 1 || (nz.len() == 2 && nz[1] == nz[0] + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_counts() {
        assert_eq!(
            (1..=9).map(log2_ceil).collect::<Vec<_>>(),
            vec![0, 1, 2, 2, 3, 3, 3, 3, 4]
        );
    }

    #[test]
    fn definitional_checks() {
        assert!(sos_satisfied(
            SosKind::Sos2,
            &[0.0, 0.5, 0.5, 0.0, 0.0],
            1e-12
        ));
        assert!(!sos_satisfied(
            SosKind::Sos2,
            &[0.5, 0.0, 0.5, 0.0, 0.0],
            1e-12
        ));
        assert!(sos_satisfied(
            SosKind::Sos2,
            &[0.0, 0.0, 1.0, 0.0, 0.0],
            1e-12
        ));
        assert!(!sos_satisfied(SosKind::Sos1, &[1.0, 1.0], 1e-12));
    }
}
