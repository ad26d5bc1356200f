"""Whitham averaging for the first and sixth Painleve equations"""
