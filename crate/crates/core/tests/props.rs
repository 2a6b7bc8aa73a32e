//! Cross-module invariants checked over generated inputs.

use proptest::prelude::*;

use cvstego::dct::{DcVector, PartitionConfig};
use cvstego::frame::{FramePlane, VideoFrames};
use cvstego::hash::{decimal_to_bits, hash_to_decimal, max_dc_hash, HashMethod};
use cvstego::index::build_index;
use cvstego::payload::{
    open_payload, seal_payload, AuxiliaryPayload, FieldWidths, PackedLocation, PayloadError,
};
use cvstego::stego::{extract, hide, segment_secret, SecretMessage, TransmissionHistory};

fn any_config() -> impl Strategy<Value = PartitionConfig> {
    (1u8..=15, 0u32..=40).prop_map(|(bits, step)| {
        let t = f64::from(750 + 5 * step) / 1000.0;
        PartitionConfig::new(4, 4, bits, t).unwrap()
    })
}

fn any_dc_vector() -> impl Strategy<Value = DcVector> {
    proptest::array::uniform16(1e-3..1e9f64)
        .prop_map(|dc| DcVector { x: 1, y: 1, dc })
}

proptest! {
    /// Scaling every feature by a power of two shifts only f64 exponents, so
    /// the ratios — and therefore the hash — are bit-identical.
    #[test]
    fn hash_ignores_global_feature_scale(
        dcv in any_dc_vector(),
        config in any_config(),
        exp in -20i32..=20,
    ) {
        let factor = 2.0f64.powi(exp);
        let mut scaled = dcv.clone();
        for c in &mut scaled.dc {
            *c *= factor;
        }
        prop_assert_eq!(max_dc_hash(&scaled, &config), max_dc_hash(&dcv, &config));
    }

    /// Value → bits → value and bits → value → bits are inverse bijections
    /// for every length.
    #[test]
    fn decimal_and_bits_are_a_bijection(len in 1u8..=15, seed in any::<u16>()) {
        let value = seed % (1 << len);
        let bits = decimal_to_bits(value, len).unwrap();
        prop_assert_eq!(bits.len(), usize::from(len));
        prop_assert_eq!(hash_to_decimal(&bits).unwrap(), value);
    }

    /// Segments stitched back together, minus the declared padding, are the
    /// original secret.
    #[test]
    fn segmentation_is_lossless(
        bits in proptest::collection::vec(any::<bool>(), 1..200),
        hash_bits in 1u8..=15,
    ) {
        let message = SecretMessage::from_bits(bits.clone());
        let (segments, padding) = segment_secret(&message, hash_bits).unwrap();
        let mut rebuilt: Vec<bool> = segments.iter().flat_map(|s| s.bits()).collect();
        prop_assert_eq!(rebuilt.len(), segments.len() * usize::from(hash_bits));
        rebuilt.truncate(rebuilt.len() - usize::from(padding));
        prop_assert_eq!(rebuilt, bits);
    }
}

fn any_payload() -> impl Strategy<Value = AuxiliaryPayload> {
    (1u16..=64, 1u16..=64, 1u32..=500, 1u32..=200, 1u8..=15, any::<u32>())
        .prop_flat_map(|(cols, rows, frames, videos, hash_bits, fingerprint)| {
            let location = (1..=cols, 1..=rows, 1..=frames, 0..videos).prop_map(
                |(x, y, frame, video)| PackedLocation { video, frame, x, y },
            );
            (
                proptest::collection::vec(location, 1..30),
                0..hash_bits,
                Just((cols, rows, frames, videos, hash_bits, fingerprint)),
            )
        })
        .prop_map(|(segments, padding, (cols, rows, frames, videos, hash_bits, fingerprint))| {
            let widths = FieldWidths::from_dimensions(cols, rows, frames, videos);
            AuxiliaryPayload::new(hash_bits, padding, widths, fingerprint, segments).unwrap()
        })
}

proptest! {
    /// Plaintext serialization is a lossless round trip for any payload the
    /// constructor accepts.
    #[test]
    fn payload_bytes_round_trip(payload in any_payload()) {
        let bytes = payload.to_bytes();
        prop_assert_eq!(AuxiliaryPayload::from_bytes(&bytes).unwrap(), payload);
    }

    /// Sealing round-trips under the right key, and any single flipped
    /// ciphertext bit fails authentication.
    #[test]
    fn sealed_payloads_authenticate(
        payload in any_payload(),
        key in proptest::array::uniform32(any::<u8>()),
        flip in any::<usize>(),
    ) {
        let sealed = seal_payload(&payload, &key);
        prop_assert_eq!(open_payload(&sealed, &key).unwrap(), payload.clone());

        let mut tampered = sealed.clone();
        let bit = flip % (tampered.len() * 8);
        tampered[bit / 8] ^= 1 << (bit % 8);
        prop_assert_eq!(open_payload(&tampered, &key), Err(PayloadError::AuthFailure));
    }
}

/// One 128x32 frame whose four blocks hash to 00, 01, 10, 11 at two bits:
/// regions 0 and 1 mirror the block number's bits, region 15 pins the
/// maximum without ever contributing a bit.
fn four_pattern_video() -> VideoFrames {
    let plane = FramePlane::from_fn(128, 32, |x, y| {
        let block = x / 32;
        let region = (y / 8) * 4 + (x % 32) / 8;
        let bright = match region {
            0 => block & 2 != 0,
            1 => block & 1 != 0,
            15 => true,
            _ => false,
        };
        if bright {
            200
        } else {
            100
        }
    });
    VideoFrames::from_planes("clip", vec![plane])
}

proptest! {
    /// Over an index that carries every 2-bit pattern, any secret hides and
    /// extracts bit-exactly.
    #[test]
    fn hide_extract_is_identity_when_carriers_exist(
        bits in proptest::collection::vec(any::<bool>(), 1..64),
    ) {
        let videos = vec![four_pattern_video()];
        let config = PartitionConfig::new(4, 1, 2, 0.85).unwrap();
        let db = build_index(&videos, &config, HashMethod::MaxDc).unwrap();
        let secret = SecretMessage::from_bits(bits);
        let mut history = TransmissionHistory::default();
        let outcome = hide(&secret, &db, &mut history).unwrap();
        prop_assert_eq!(extract(&outcome.payload, &db, &videos).unwrap(), secret);
    }
}
