//! mdbook cannot run code blocks that depend on workspace crates, so each
//! chapter of `book/src` is attached to an empty module here and its code
//! blocks run under `cargo test --doc`. One module per chapter keeps failure
//! names pointing at the right file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/knowledge-base.md")]
pub mod knowledge_base {}
#[doc = include_str!("../../../book/src/routing.md")]
pub mod routing {}
#[doc = include_str!("../../../book/src/retrieval.md")]
pub mod retrieval {}
#[doc = include_str!("../../../book/src/answers.md")]
pub mod answers {}
#[doc = include_str!("../../../book/src/validation.md")]
pub mod validation {}
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
#[doc = include_str!("../../../book/src/risk.md")]
pub mod risk {}
#[doc = include_str!("../../../book/src/gateway.md")]
pub mod gateway {}
#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
#[doc = include_str!("../../../book/src/api.md")]
pub mod api {}
#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}
