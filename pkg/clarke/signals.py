import django.dispatch

auction_settled = django.dispatch.Signal()
"""
When a mechanism has computed its allocation and payments.

        providing_args=["mechanism", "outcome"]
"""

bids_rejected = django.dispatch.Signal()
"""
When submitted bid functions fail the consistency check and
no good is allocated.

        providing_args=["mechanism", "report"]
"""

deviation_found = django.dispatch.Signal()
"""
When a verification sweep finds a deviation that beats truthful bidding
by more than ``EPSILON``.

        providing_args=["mechanism", "worst_case"]
"""
