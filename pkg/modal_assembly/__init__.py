#
# Copyright (c) 2023 Grant Ramsay.
# All Rights Reserved.
#
# This project is licenced under the MIT License.
# See the LICENSE file for more information.
#
"""Tolerance analysis of planar assemblies with form errors."""
