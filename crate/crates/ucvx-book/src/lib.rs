//! Runs the code blocks of the guide as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/moduli.md")]
pub mod moduli {}
#[doc = include_str!("../../../book/src/envelopes.md")]
pub mod envelopes {}
#[doc = include_str!("../../../book/src/trees.md")]
pub mod trees {}
#[doc = include_str!("../../../book/src/dentability.md")]
pub mod dentability {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
