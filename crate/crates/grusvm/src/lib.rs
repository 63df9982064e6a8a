//! A recurrent network for binary intrusion detection, built from scratch:
//! a gated recurrent cell with hand-derived backpropagation through time,
//! interchangeable L2-SVM and Softmax output layers, Adam training, the
//! traffic-log preprocessing pipeline that feeds it, and the usual binary
//! classification metrics.
//!
//! The `book/` directory at the repository root is a narrative guide to
//! each piece; its code snippets run as doc-tests so they stay in sync
//! with the library.

pub mod cli;
pub mod error;
pub mod gru;
pub mod heads;
pub mod nn;
pub mod preprocess;
pub mod train;

mod util;

pub use error::{Error, Result};

// Every rust code block in the book runs as a doc-test, so the guide and
// the library cannot drift apart.
#[cfg(doctest)]
mod booktest {
    macro_rules! booktest {
        ($name:ident) => {
            #[doc = include_str!(concat!("../../../book/src/", stringify!($name), ".md"))]
            mod $name {}
        };
    }
    booktest!(introduction);
    booktest!(preprocessing);
    booktest!(recurrent_core);
    booktest!(output_heads);
    booktest!(training);
    booktest!(evaluation);
    booktest!(command_line);
}
