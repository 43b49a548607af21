use super::{DeviceProfile, InstanceError, Phenomenon};

/// Per-period transmit and receive energy of one phenomenon over one hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConstants {
    pub transmit: f64,
    pub receive: f64,
}

/// Bits produced by one sensing node for `phenomenon` during one period.
pub fn data_volume_bits(phenomenon: &Phenomenon, period_length_min: f64) -> f64 {
    phenomenon.sampling_rate * period_length_min * f64::from(phenomenon.bits_per_sample)
}

/// Transmit energy over a hop of length `distance` and receive energy per
/// relayed route, both for one period's worth of `phenomenon` data.
pub fn derive_energy_constants(
    device: &DeviceProfile,
    phenomenon: &Phenomenon,
    period_length_min: f64,
    distance: f64,
) -> Result<EnergyConstants, InstanceError> {
    if !(period_length_min.is_finite() && period_length_min > 0.0) {
        return Err(InstanceError::InvalidParameter(format!(
            "period length must be positive, got {period_length_min}"
        )));
    }
    let volume = data_volume_bits(phenomenon, period_length_min);
    Ok(EnergyConstants {
        transmit: volume * device.transmit.per_bit(distance),
        receive: volume * device.receive_energy_per_bit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::TransmitCost;
    use proptest::prelude::*;

    fn phen(rate: f64, bits: u32) -> Phenomenon {
        Phenomenon::new(1, 8.8, rate, bits)
    }

    #[test]
    fn volume_arithmetic() {
        assert_eq!(data_volume_bits(&phen(2.0, 16), 60.0), 1920.0);
    }

    #[test]
    fn zero_receive_cost() {
        let device = DeviceProfile {
            receive_energy_per_bit: 0.0,
            ..DeviceProfile::default()
        };
        let c = derive_energy_constants(&device, &phen(2.0, 16), 60.0, 3.0).unwrap();
        assert_eq!(c.receive, 0.0);
    }

    #[test]
    fn rejects_nonpositive_period() {
        let d = DeviceProfile::default();
        assert!(derive_energy_constants(&d, &phen(2.0, 16), 0.0, 1.0).is_err());
        assert!(derive_energy_constants(&d, &phen(2.0, 16), -5.0, 1.0).is_err());
    }

    #[test]
    fn doubling_rate_doubles_transmit_on_every_hop() {
        let device = DeviceProfile {
            transmit: TransmitCost::Quadratic {
                base_per_bit: 1e-4,
                per_bit_per_m2: 3e-6,
            },
            ..DeviceProfile::default()
        };
        for d in [0.0, 1.5, 7.25, 11.0] {
            let one = derive_energy_constants(&device, &phen(2.0, 16), 60.0, d).unwrap();
            let two = derive_energy_constants(&device, &phen(4.0, 16), 60.0, d).unwrap();
            // recomputed by hand from the per-bit formula
            let by_hand = 4.0 * 60.0 * 16.0 * (1e-4 + 3e-6 * d * d);
            assert!((two.transmit - by_hand).abs() <= 1e-12 * by_hand.max(1.0));
            assert!((two.transmit - 2.0 * one.transmit).abs() <= 1e-12 * two.transmit.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn linear_in_each_factor(
            rate in 0.1f64..10.0,
            len in 1.0f64..120.0,
            bits in 1u32..64,
            k in 1u32..5,
            d in 0.0f64..20.0,
        ) {
            let device = DeviceProfile {
                transmit: TransmitCost::Quadratic { base_per_bit: 2e-4, per_bit_per_m2: 1e-6 },
                ..DeviceProfile::default()
            };
            let base = derive_energy_constants(&device, &phen(rate, bits), len, d).unwrap();
            let kf = f64::from(k);
            let variants = [
                derive_energy_constants(&device, &phen(rate * kf, bits), len, d).unwrap(),
                derive_energy_constants(&device, &phen(rate, bits), len * kf, d).unwrap(),
                derive_energy_constants(&device, &phen(rate, bits * k), len, d).unwrap(),
            ];
            for v in variants {
                prop_assert!((v.transmit - kf * base.transmit).abs() <= 1e-9 * v.transmit.max(1e-12));
                prop_assert!((v.receive - kf * base.receive).abs() <= 1e-9 * v.receive.max(1e-12));
            }
        }
    }
}
