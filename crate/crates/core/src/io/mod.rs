//! File formats.
//!
//! | data | format |
//! |------|--------|
//! | depth rasters (lossless) | single-channel PFM, invalid pixels written as 0 |
//! | depth rasters (dataset style) | 16-bit grayscale PNG in millimeters, 0 = invalid |
//! | point maps | `PREFIX.{x,y,z,mask}.pfm` |
//! | sparse anchors | CSV `row,col,depth_m` |
//! | reports | JSON, fixed key order, 17 significant digits |

mod pfm;
mod png16;
mod report;
mod sparse_csv;

pub use pfm::{
    decode_pfm, encode_pfm, read_pfm, read_pfm_image, read_point_map, write_pfm, write_pfm_image,
    write_point_map, PfmImage,
};
pub use png16::{read_png16, write_png16};
pub use report::{
    from_json, read_report, to_json, write_report, Report, ReportInputs, ReportSolver, Versions,
    REPORT_FORMAT,
};
pub use sparse_csv::{parse_sparse_csv, read_sparse_csv, sparse_csv_string, write_sparse_csv};
