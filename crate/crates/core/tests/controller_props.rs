use proptest::prelude::*;

use taskcomm::controller::{
    dispatch, fold_events, oracle_events, step, AckPolicy, ControllerError, ControllerState, Targets,
    TransmissionController,
};
use taskcomm::overhead::OverheadLedger;
use taskcomm::posture::PostureLabel;
use taskcomm::sim::Room;

fn posture() -> impl Strategy<Value = PostureLabel> {
    (0usize..4).prop_map(|c| PostureLabel::from_code(c).unwrap())
}

/// Sequences built from runs, so long stable stretches are common.
fn run_sequence() -> impl Strategy<Value = Vec<PostureLabel>> {
    prop::collection::vec((posture(), 1usize..8), 0..25)
        .prop_map(|runs| runs.into_iter().flat_map(|(p, n)| std::iter::repeat_n(p, n)).collect())
}

fn policy(vw: usize) -> AckPolicy {
    AckPolicy {
        validation_windows: vw,
        ..AckPolicy::default()
    }
}

proptest! {
    #[test]
    fn fold_matches_oracle(seq in run_sequence(), vw in 1usize..7) {
        let p = policy(vw);
        prop_assert_eq!(fold_events(&seq, &p), oracle_events(&seq, &p));
    }

    #[test]
    fn events_chain_and_are_spaced(seq in run_sequence(), vw in 1usize..7) {
        let events = fold_events(&seq, &policy(vw));
        for e in &events {
            prop_assert_ne!(e.from, e.to);
            prop_assert_eq!(seq[e.t], e.to);
            // The new posture held for the whole validation period.
            prop_assert!(e.t + 1 >= vw);
            prop_assert!(seq[e.t + 1 - vw..=e.t].iter().all(|&p| p == e.to));
        }
        for pair in events.windows(2) {
            prop_assert_eq!(pair[0].to, pair[1].from);
            prop_assert!(pair[1].t >= pair[0].t + vw);
        }
        if let Some(first) = events.first() {
            prop_assert_eq!(first.from, seq[0]);
        }
    }

    #[test]
    fn constant_sequences_are_silent(p in posture(), n in 0usize..200) {
        prop_assert!(fold_events(&vec![p; n], &AckPolicy::default()).is_empty());
    }

    #[test]
    fn online_wrapper_agrees_with_fold(seq in run_sequence()) {
        let mut c = TransmissionController::new(AckPolicy::default()).unwrap();
        let online: Vec<_> = seq.iter().enumerate().filter_map(|(i, &p)| c.observe(p, i).unwrap()).collect();
        prop_assert_eq!(online, fold_events(&seq, &AckPolicy::default()));
    }

    #[test]
    fn ledger_counts_every_upload(seq in run_sequence(), per_ack in 1usize..4) {
        let p = AckPolicy { segments_per_ack: per_ack, ..AckPolicy::default() };
        let mut ledger = OverheadLedger::default();
        let events = fold_events(&seq, &p);
        for e in &events {
            let cmds = dispatch(e, &p, &Room::ALL, &mut ledger).unwrap();
            prop_assert_eq!(cmds.len(), 3);
            prop_assert!(cmds.iter().all(|c| c.start_window == e.t && c.segments == per_ack));
        }
        prop_assert_eq!(ledger.n_t, (events.len() * 3 * per_ack) as u64);
        prop_assert_eq!(ledger.acks, events.len() as u64);
    }

    #[test]
    fn skipped_window_is_rejected(p in posture(), start in 0usize..1000, gap in 2usize..50) {
        let policy = AckPolicy::default();
        let (state, _) = step(ControllerState::new(), p, start, &policy).unwrap();
        let err = step(state, p, start + gap, &policy).unwrap_err();
        let is_non_consecutive = matches!(err, ControllerError::NonConsecutive { .. });
        prop_assert!(is_non_consecutive);
    }
}

#[test]
fn subset_targets_must_be_deployed() {
    let p = AckPolicy {
        targets: Targets::Subset(vec![Room::Kitchen]),
        ..AckPolicy::default()
    };
    let seq = [PostureLabel::Lying, PostureLabel::Sitting, PostureLabel::Sitting, PostureLabel::Sitting];
    let event = fold_events(&seq, &p).remove(0);
    let mut ledger = OverheadLedger::default();
    let err = dispatch(&event, &p, &[Room::Bedroom], &mut ledger).unwrap_err();
    assert!(matches!(err, ControllerError::UnknownCamera(Room::Kitchen)));
    assert_eq!(ledger.n_t, 0);
    let cmds = dispatch(&event, &p, &Room::ALL, &mut ledger).unwrap();
    assert_eq!(cmds.len(), 1);
    assert_eq!(ledger.n_t, 1);
}
