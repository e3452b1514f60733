//! Variable and set naming. Every builder and assignment constructor goes
//! through these helpers so names stay in sync.

pub const D: &str = "D";
pub const XC: &str = "Xc";
pub const YC: &str = "Yc";
pub const VX: &str = "Vx";
pub const VY: &str = "Vy";

pub fn u(i: usize) -> String {
    format!("U_{i}")
}
pub fn f(i: usize) -> String {
    format!("F_{i}")
}
pub fn c(d: usize, j: usize, i: usize) -> String {
    format!("C{d}_{j}_{i}")
}
pub fn c_set(d: usize, i: usize) -> String {
    format!("C{d}_{i}")
}
pub fn q(j: usize, i: usize) -> String {
    format!("Q_{j}_{i}")
}
pub fn r(j: usize, i: usize) -> String {
    format!("R_{j}_{i}")
}
pub fn nx(i: usize, q: usize) -> String {
    format!("nx_{i}_{q}")
}
pub fn ny(i: usize, q: usize) -> String {
    format!("ny_{i}_{q}")
}
pub fn dx(d: usize, i: usize, q: usize) -> String {
    format!("dx{d}_{i}_{q}")
}
pub fn dy(d: usize, i: usize, q: usize) -> String {
    format!("dy{d}_{i}_{q}")
}
pub fn mx(q: usize) -> String {
    format!("mx_{q}")
}
pub fn my(q: usize) -> String {
    format!("my_{q}")
}
pub fn square(coord: &str) -> String {
    format!("sq_{coord}")
}
pub fn weight(coord: &str, s: usize) -> String {
    format!("w_{coord}_{s}")
}
pub fn pwl_set(coord: &str) -> String {
    format!("pwl_{coord}")
}
pub fn gamma(i: usize, q: usize, l: usize) -> String {
    format!("g_{i}_{q}_{l}")
}
pub fn sector_set(i: usize, q: usize) -> String {
    format!("sector_{i}_{q}")
}
pub fn block(coord: &str, s: usize) -> String {
    format!("b_{coord}_{s}")
}
pub fn block_set(coord: &str) -> String {
    format!("blk_{coord}")
}
/// Names of the auxiliary variables of an encoded SOS1 set.
pub fn sos_bit(set: &str, b: usize) -> String {
    format!("{set}_bit{b}")
}
/// Names of the auxiliary segment selectors of an encoded SOS2 set.
pub fn sos_bar(set: &str, s: usize) -> String {
    format!("{set}_bar{s}")
}
