//! Bundled catalog of the non-pointwise, unit-stride convolution layer shapes
//! of six classification networks. Rows are `(Ih, Iw, Oh, Ow, Kh, Kw, Sh, Sw,
//! Ic, K)`, reproduced verbatim; padding is inferred per row (same-size output
//! at unit stride means SAME, otherwise VALID).

use crate::error::{Error, Result};
use cpoconv::ConvConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Network {
    Resnet50,
    Resnet101,
    Resnet152,
    Iv1,
    Iv3,
    Iv4,
}

impl Network {
    pub fn all() -> [Network; 6] {
        [
            Network::Resnet50,
            Network::Resnet101,
            Network::Resnet152,
            Network::Iv1,
            Network::Iv3,
            Network::Iv4,
        ]
    }
}

impl std::fmt::Display for Network {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Network::Resnet50 => "resnet50",
            Network::Resnet101 => "resnet101",
            Network::Resnet152 => "resnet152",
            Network::Iv1 => "iv1",
            Network::Iv3 => "iv3",
            Network::Iv4 => "iv4",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Network {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "resnet50" => Ok(Network::Resnet50),
            "resnet101" => Ok(Network::Resnet101),
            "resnet152" => Ok(Network::Resnet152),
            "iv1" => Ok(Network::Iv1),
            "iv3" => Ok(Network::Iv3),
            "iv4" => Ok(Network::Iv4),
            other => Err(Error::UnknownNetwork(other.to_string())),
        }
    }
}

/// One convolution layer shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    pub layer_id: usize,
    pub network: Network,
    pub ih: usize,
    pub iw: usize,
    pub oh: usize,
    pub ow: usize,
    pub kh: usize,
    pub kw: usize,
    pub sh: usize,
    pub sw: usize,
    pub ic: usize,
    pub k: usize,
    pub pointwise: bool,
}

impl LayerSpec {
    pub fn new(
        layer_id: usize,
        network: Network,
        dims: (usize, usize, usize, usize),
        kernel: (usize, usize),
        strides: (usize, usize),
        ic: usize,
        k: usize,
    ) -> Self {
        let (ih, iw, oh, ow) = dims;
        let (kh, kw) = kernel;
        let (sh, sw) = strides;
        LayerSpec {
            layer_id,
            network,
            ih,
            iw,
            oh,
            ow,
            kh,
            kw,
            sh,
            sw,
            ic,
            k,
            pointwise: kh == 1 && kw == 1,
        }
    }

    /// SAME when the output keeps the input's spatial dims at unit stride.
    pub fn is_same_padded(&self) -> bool {
        self.sh == 1 && self.sw == 1 && self.oh == self.ih && self.ow == self.iw
    }

    /// Layers the sparse paths serve: unit strides, non-pointwise.
    pub fn eligible(&self) -> bool {
        self.sh == 1 && self.sw == 1 && !self.pointwise
    }

    pub fn conv_config(&self) -> Result<ConvConfig> {
        let config = if self.is_same_padded() {
            ConvConfig::same(self.ih, self.iw, self.kh, self.kw)?
        } else {
            ConvConfig::valid_strided(self.ih, self.iw, self.kh, self.kw, self.sh, self.sw)?
        };
        if config.output_dims() != (self.oh, self.ow) {
            return Err(Error::Format(format!(
                "layer {} of {}: stated output {}x{} inconsistent with geometry",
                self.layer_id, self.network, self.oh, self.ow
            )));
        }
        Ok(config)
    }
}

/// `(Ih, Oh, Kh, Kw, Ic, K)` — every catalog row is spatially square.
type Row = (usize, usize, usize, usize, usize, usize);

fn expand(network: Network, runs: &[(usize, Row)]) -> Vec<LayerSpec> {
    let mut out = Vec::new();
    for &(count, (ih, oh, kh, kw, ic, k)) in runs {
        for _ in 0..count {
            let id = out.len();
            out.push(LayerSpec::new(
                id,
                network,
                (ih, ih, oh, oh),
                (kh, kw),
                (1, 1),
                ic,
                k,
            ));
        }
    }
    out
}

/// All considered layer shapes of one network, in table order.
pub fn layer_catalog(network: Network) -> Vec<LayerSpec> {
    match network {
        Network::Resnet50 => expand(
            network,
            &[
                (2, (75, 75, 3, 3, 64, 64)),
                (3, (38, 38, 3, 3, 128, 128)),
                (5, (19, 19, 3, 3, 256, 256)),
                (3, (10, 10, 3, 3, 512, 512)),
            ],
        ),
        Network::Resnet101 => expand(
            network,
            &[
                (2, (75, 75, 3, 3, 64, 64)),
                (3, (38, 38, 3, 3, 128, 128)),
                (22, (19, 19, 3, 3, 256, 256)),
                (3, (10, 10, 3, 3, 512, 512)),
            ],
        ),
        Network::Resnet152 => expand(
            network,
            &[
                (2, (56, 56, 3, 3, 64, 64)),
                (7, (28, 28, 3, 3, 128, 128)),
                (35, (14, 14, 3, 3, 256, 256)),
                (3, (7, 7, 3, 3, 512, 512)),
            ],
        ),
        Network::Iv1 => expand(
            network,
            &[
                (1, (56, 56, 3, 3, 64, 192)),
                (1, (28, 28, 3, 3, 96, 128)),
                (1, (28, 28, 3, 3, 16, 32)),
                (1, (28, 28, 3, 3, 128, 192)),
                (1, (28, 28, 3, 3, 32, 96)),
                (1, (14, 14, 3, 3, 96, 208)),
                (1, (14, 14, 3, 3, 16, 48)),
                (1, (14, 14, 3, 3, 112, 224)),
                (1, (14, 14, 3, 3, 24, 64)),
                (1, (14, 14, 3, 3, 128, 256)),
                (1, (14, 14, 3, 3, 24, 64)),
                (1, (14, 14, 3, 3, 144, 288)),
                (1, (14, 14, 3, 3, 32, 64)),
                (1, (14, 14, 3, 3, 160, 320)),
                (1, (14, 14, 3, 3, 32, 128)),
                (1, (7, 7, 3, 3, 160, 320)),
                (1, (7, 7, 3, 3, 32, 128)),
                (1, (7, 7, 3, 3, 192, 384)),
                (1, (7, 7, 3, 3, 48, 128)),
            ],
        ),
        Network::Iv3 => expand(
            network,
            &[
                (1, (149, 147, 3, 3, 32, 32)),
                (1, (147, 147, 3, 3, 32, 64)),
                (1, (73, 71, 3, 3, 80, 192)),
                (1, (35, 35, 5, 5, 48, 64)),
                (1, (35, 35, 3, 3, 64, 96)),
                (1, (35, 35, 3, 3, 96, 96)),
                (1, (35, 35, 5, 5, 48, 64)),
                (1, (35, 35, 3, 3, 64, 96)),
                (1, (35, 35, 3, 3, 96, 96)),
                (1, (35, 35, 5, 5, 48, 64)),
                (1, (35, 35, 3, 3, 64, 96)),
                (1, (35, 35, 3, 3, 96, 96)),
                (1, (35, 35, 3, 3, 64, 96)),
                (1, (17, 17, 1, 7, 128, 128)),
                (1, (17, 17, 7, 1, 128, 192)),
                (1, (17, 17, 7, 1, 128, 128)),
                (1, (17, 17, 1, 7, 128, 128)),
                (1, (17, 17, 7, 1, 128, 128)),
                (1, (17, 17, 1, 7, 128, 192)),
                (1, (17, 17, 1, 7, 160, 160)),
                (1, (17, 17, 7, 1, 160, 192)),
                (1, (17, 17, 7, 1, 160, 160)),
                (1, (17, 17, 1, 7, 160, 160)),
                (1, (17, 17, 7, 1, 160, 160)),
                (1, (17, 17, 1, 7, 160, 192)),
                (1, (17, 17, 1, 7, 160, 160)),
                (1, (17, 17, 7, 1, 160, 192)),
                (1, (17, 17, 7, 1, 160, 160)),
                (1, (17, 17, 1, 7, 160, 160)),
                (1, (17, 17, 7, 1, 160, 160)),
                (1, (17, 17, 1, 7, 160, 192)),
                (1, (17, 17, 1, 7, 192, 192)),
                (2, (17, 17, 7, 1, 192, 192)),
                (1, (17, 17, 1, 7, 192, 192)),
                (1, (17, 17, 7, 1, 192, 192)),
                (2, (17, 17, 1, 7, 192, 192)),
                (1, (17, 17, 7, 1, 192, 192)),
                (1, (8, 8, 1, 3, 384, 384)),
                (1, (8, 8, 3, 1, 384, 384)),
                (1, (8, 8, 3, 3, 448, 384)),
                (1, (8, 8, 1, 3, 384, 384)),
                (1, (8, 8, 3, 1, 384, 384)),
                (1, (8, 8, 1, 3, 384, 384)),
                (1, (8, 8, 3, 1, 384, 384)),
                (1, (8, 8, 3, 3, 448, 384)),
                (1, (8, 8, 1, 3, 384, 384)),
                (1, (8, 8, 3, 1, 384, 384)),
            ],
        ),
        Network::Iv4 => {
            let mut runs: Vec<(usize, Row)> = vec![
                (1, (149, 147, 3, 3, 32, 32)),
                (1, (147, 147, 3, 3, 32, 64)),
                (1, (73, 71, 3, 3, 64, 96)),
                (1, (73, 73, 1, 7, 64, 64)),
                (1, (73, 73, 7, 1, 64, 64)),
                (1, (73, 71, 3, 3, 64, 96)),
            ];
            // Four 3x3 inception blocks at 35x35.
            for _ in 0..4 {
                runs.push((2, (35, 35, 3, 3, 64, 96)));
                runs.push((1, (35, 35, 3, 3, 96, 96)));
            }
            runs.push((1, (35, 35, 3, 3, 192, 224)));
            // Seven identical 17x17 factorized blocks.
            for _ in 0..7 {
                runs.push((1, (17, 17, 1, 7, 192, 224)));
                runs.push((1, (17, 17, 7, 1, 224, 256)));
                runs.push((1, (17, 17, 7, 1, 192, 192)));
                runs.push((1, (17, 17, 1, 7, 192, 224)));
                runs.push((1, (17, 17, 7, 1, 224, 224)));
                runs.push((1, (17, 17, 1, 7, 224, 256)));
            }
            runs.push((1, (17, 17, 1, 7, 256, 256)));
            runs.push((1, (17, 17, 7, 1, 256, 320)));
            // Three identical 8x8 factorized blocks.
            for _ in 0..3 {
                runs.push((1, (8, 8, 1, 3, 384, 256)));
                runs.push((1, (8, 8, 3, 1, 384, 256)));
                runs.push((1, (8, 8, 3, 1, 384, 448)));
                runs.push((1, (8, 8, 1, 3, 448, 512)));
                runs.push((1, (8, 8, 1, 3, 512, 256)));
                runs.push((1, (8, 8, 3, 1, 512, 256)));
            }
            expand(network, &runs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::str::FromStr;

    #[test]
    fn catalog_row_counts() {
        assert_eq!(layer_catalog(Network::Resnet50).len(), 13);
        assert_eq!(layer_catalog(Network::Resnet101).len(), 30);
        assert_eq!(layer_catalog(Network::Resnet152).len(), 47);
        assert_eq!(layer_catalog(Network::Iv1).len(), 19);
        assert_eq!(layer_catalog(Network::Iv3).len(), 49);
        assert_eq!(layer_catalog(Network::Iv4).len(), 81);
    }

    #[test]
    fn resnet50_is_all_3x3_unit_stride() {
        for spec in layer_catalog(Network::Resnet50) {
            assert_eq!((spec.kh, spec.kw, spec.sh, spec.sw), (3, 3, 1, 1));
            assert!(spec.eligible());
        }
    }

    #[test]
    fn iv1_first_row() {
        let spec = layer_catalog(Network::Iv1)[0];
        assert_eq!((spec.ih, spec.iw), (56, 56));
        assert_eq!((spec.kh, spec.kw), (3, 3));
        assert_eq!((spec.ic, spec.k), (64, 192));
    }

    #[test]
    fn iv3_has_asymmetric_kernels_and_valid_rows() {
        let catalog = layer_catalog(Network::Iv3);
        assert!(catalog.iter().any(|s| (s.kh, s.kw) == (1, 7)));
        assert!(catalog.iter().any(|s| (s.kh, s.kw) == (7, 1)));
        // Row 0 reduces 149 -> 147: VALID.
        assert!(!catalog[0].is_same_padded());
        assert!(catalog[1].is_same_padded());
        // Spot-check the factorized rows.
        assert_eq!(
            (
                catalog[13].kh,
                catalog[13].kw,
                catalog[13].ic,
                catalog[13].k
            ),
            (1, 7, 128, 128)
        );
        assert_eq!(
            (
                catalog[14].kh,
                catalog[14].kw,
                catalog[14].ic,
                catalog[14].k
            ),
            (7, 1, 128, 192)
        );
        assert_eq!(
            (
                catalog[38].kh,
                catalog[38].kw,
                catalog[38].ic,
                catalog[38].k
            ),
            (7, 1, 192, 192)
        );
        assert_eq!(
            (
                catalog[41].kh,
                catalog[41].kw,
                catalog[41].ic,
                catalog[41].k
            ),
            (3, 3, 448, 384)
        );
        assert_eq!(
            (
                catalog[48].kh,
                catalog[48].kw,
                catalog[48].ic,
                catalog[48].k
            ),
            (3, 1, 384, 384)
        );
    }

    #[test]
    fn iv4_spot_checks() {
        let catalog = layer_catalog(Network::Iv4);
        assert_eq!(
            (catalog[3].kh, catalog[3].kw, catalog[3].ic, catalog[3].k),
            (1, 7, 64, 64)
        );
        assert_eq!((catalog[18].ic, catalog[18].k), (192, 224));
        assert_eq!(
            (
                catalog[19].kh,
                catalog[19].kw,
                catalog[19].ic,
                catalog[19].k
            ),
            (1, 7, 192, 224)
        );
        assert_eq!(
            (
                catalog[62].kh,
                catalog[62].kw,
                catalog[62].ic,
                catalog[62].k
            ),
            (7, 1, 256, 320)
        );
        assert_eq!(
            (
                catalog[63].kh,
                catalog[63].kw,
                catalog[63].ic,
                catalog[63].k
            ),
            (1, 3, 384, 256)
        );
        assert_eq!(
            (
                catalog[80].kh,
                catalog[80].kw,
                catalog[80].ic,
                catalog[80].k
            ),
            (3, 1, 512, 256)
        );
    }

    #[test]
    fn every_row_builds_a_consistent_config() {
        for network in Network::all() {
            for spec in layer_catalog(network) {
                let config = spec.conv_config().unwrap();
                assert_eq!(
                    config.output_dims(),
                    (spec.oh, spec.ow),
                    "{network} layer {}",
                    spec.layer_id
                );
            }
        }
    }

    #[test]
    fn unknown_network_is_a_lookup_error() {
        assert!(matches!(
            Network::from_str("vgg16"),
            Err(Error::UnknownNetwork(_))
        ));
    }
}
