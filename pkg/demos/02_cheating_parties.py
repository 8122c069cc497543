"""
Who gets paid when someone cheats
=================================

Each adversary runs the same two-device scenario.  A run is fair when a node
is paid exactly for the devices that decrypted, and the vendor recovers the
rest once the deadline passes.
"""

import dataclasses

from podupdate import ADVERSARIES, ScenarioConfig, run_scenario

base = ScenarioConfig(seed=3, devices=2, nodes=2, payload_size=2048)

print(f"{'adversary':<24}{'outcome':<22}{'payouts':>8}{'refund':>8}")
for adversary in ADVERSARIES:
    report = run_scenario(dataclasses.replace(base, adversary=adversary))
    print(f"{adversary:<24}{report.outcome:<22}{report.payouts:>8}{report.refund:>8}")
    for d in report.deliveries:
        # the reason the claim or session stopped, if it did
        print(f"    {d['device_id']}: paid {d['paid']}, delivered {d['delivered']},"
              f" {d['claim_reason'] or d['aborted'] or 'ok'}")
