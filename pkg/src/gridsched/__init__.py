"""Conflict-aware scheduling of URLLC and eMBB services on a mini-slot grid."""
