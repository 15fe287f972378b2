"""Finite fields, block codes, closed forms, the watchdog protocol and the network simulator."""
