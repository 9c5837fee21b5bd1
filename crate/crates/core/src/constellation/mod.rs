//! Constellations, index permutations and the code families built on them.
//!
//! Codebooks are stored at unit scale: the transmitted block is
//! `sqrt(SNR) * X`, and square QAMs use spacing `s` with `s^2 = 2 / M`, so the
//! scalar universality constant is `c = 2` (`d_min^2 = 2 * 2^-R`). Rails of a
//! QAM are numbered left to right.

mod codebook;
mod families;
mod pam;
mod perm;

pub use codebook::{Codebook, Normalization};
pub use families::{
    alamouti_codebook, dblast_two_stream_codebook, diagonal_miso_codebook, inverse_pd_sum, make_qam,
    make_rect_qam, make_square_qam, permutation_codebook, qam_permutation_codebook,
    random_permutation_search, rotated_qam_codebook, rotation_angles, timespace_codebook, udm_codebook,
    vblast_codebook, vblast_from_points,
};
pub use pam::{pam_point, pam_points, rect_qam_points, square_qam_points, PamSpec};
pub use perm::{
    alt_flip_reversal_perm, bit_reversal_perm, max_min_product_permutation, random_perm, DigitPermutation,
};
