#!/usr/bin/env python3
"""
Test cases for timing measurement functionality.
"""

import json
import os
import shutil
import sys
import tempfile
import time
import unittest
from pathlib import Path

import numpy as np

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent / 'src'))

from poolselect.utils.timing import (
    FileTimingStorage,
    TimingManager,
    get_timing_manager,
    measure_em_fit,
    measure_inference,
    measure_timing,
    reset_timing_manager,
)

TIMING_VARIABLES = ['POOLSELECT_TIMING_ENABLED', 'POOLSELECT_TIMING_FILE']


def read_measurements(path):
    with open(path, 'r') as f:
        return [json.loads(line) for line in f if line.strip()]


class TestTimingStorage(unittest.TestCase):
    """Test the JSON-lines timing store."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.temp_file = os.path.join(self.temp_dir, 'nested', 'timing.jsonl')

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_file_timing_storage(self):
        """Measurements are appended one JSON object per line."""
        storage = FileTimingStorage(self.temp_file)
        storage.store_timing({'function': 'em_fit', 'duration_ms': 12.5})
        storage.store_timing({'function': 'inference', 'duration_ms': 3.0})

        lines = read_measurements(self.temp_file)
        self.assertEqual([m['function'] for m in lines], ['em_fit', 'inference'])
        self.assertEqual(storage.read_all(), lines)

    def test_read_all_without_file(self):
        storage = FileTimingStorage(self.temp_file)
        self.assertEqual(storage.read_all(), [])


class TestTimingManager(unittest.TestCase):
    """Test timing manager configuration."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.temp_file = os.path.join(self.temp_dir, 'timing.jsonl')
        self.original_env = {key: os.environ.pop(key, None) for key in TIMING_VARIABLES}
        reset_timing_manager()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)
        for key, value in self.original_env.items():
            os.environ.pop(key, None)
            if value is not None:
                os.environ[key] = value
        reset_timing_manager()

    def test_timing_enabled_by_environment(self):
        os.environ['POOLSELECT_TIMING_ENABLED'] = 'yes'
        os.environ['POOLSELECT_TIMING_FILE'] = self.temp_file

        manager = TimingManager()
        self.assertTrue(manager.enabled)
        self.assertIsInstance(manager.storage, FileTimingStorage)

    def test_timing_disabled_by_environment(self):
        os.environ['POOLSELECT_TIMING_ENABLED'] = 'off'

        manager = TimingManager()
        self.assertFalse(manager.enabled)
        self.assertIsNone(manager.storage)

    def test_record_when_enabled(self):
        os.environ['POOLSELECT_TIMING_ENABLED'] = 'true'
        os.environ['POOLSELECT_TIMING_FILE'] = self.temp_file

        manager = TimingManager()
        manager.record_timing('em_fit', 42.0, {'lam': 2.0})

        measurement = read_measurements(self.temp_file)[0]
        self.assertEqual(measurement['function'], 'em_fit')
        self.assertEqual(measurement['duration_ms'], 42.0)
        self.assertEqual(measurement['context'], {'lam': 2.0})
        self.assertEqual(measurement['process_id'], os.getpid())

    def test_no_record_when_disabled(self):
        os.environ['POOLSELECT_TIMING_ENABLED'] = 'false'
        os.environ['POOLSELECT_TIMING_FILE'] = self.temp_file

        TimingManager().record_timing('em_fit', 42.0)
        self.assertFalse(os.path.exists(self.temp_file))

    def test_manager_is_cached_until_reset(self):
        os.environ['POOLSELECT_TIMING_ENABLED'] = 'false'
        first = get_timing_manager()
        self.assertIs(get_timing_manager(), first)
        reset_timing_manager()
        self.assertIsNot(get_timing_manager(), first)


class TestTimingDecorators(unittest.TestCase):
    """Test timing decorator functionality."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()
        self.temp_file = os.path.join(self.temp_dir, 'timing.jsonl')
        self.original_env = {key: os.environ.pop(key, None) for key in TIMING_VARIABLES}
        os.environ['POOLSELECT_TIMING_ENABLED'] = 'true'
        os.environ['POOLSELECT_TIMING_FILE'] = self.temp_file
        reset_timing_manager()

    def tearDown(self):
        shutil.rmtree(self.temp_dir, ignore_errors=True)
        for key, value in self.original_env.items():
            os.environ.pop(key, None)
            if value is not None:
                os.environ[key] = value
        reset_timing_manager()

    def test_basic_timing_decorator(self):
        @measure_timing("sleepy")
        def sleepy():
            time.sleep(0.01)
            return "result"

        self.assertEqual(sleepy(), "result")
        measurement = read_measurements(self.temp_file)[0]
        self.assertEqual(measurement['function'], 'sleepy')
        self.assertGreaterEqual(measurement['duration_ms'], 8)

    def test_arguments_are_described_compactly(self):
        @measure_timing("described", include_args=True)
        def combine(matrix, lam, label=None):
            return matrix.sum() * lam

        combine(np.ones((3, 2)), 2.0, label="x1")
        context = read_measurements(self.temp_file)[0]['context']
        self.assertEqual(context['args'], ["array(3, 2)", 2.0])
        self.assertEqual(context['kwargs'], {'label': 'x1'})

    def test_em_fit_decorator_records_convergence(self):
        class Result:
            converged = True

        @measure_em_fit
        def fake_fit(data, lam):
            return Result()

        fake_fit(np.zeros((4, 2)), 1.5)
        measurement = read_measurements(self.temp_file)[0]
        self.assertEqual(measurement['function'], 'em_fit')
        self.assertTrue(measurement['context']['converged'])
        self.assertEqual(measurement['context']['result_type'], 'Result')

    def test_inference_decorator(self):
        @measure_inference
        def intervals(values):
            return list(values)

        self.assertEqual(intervals((1, 2)), [1, 2])
        self.assertEqual(read_measurements(self.temp_file)[0]['function'], 'inference')

    def test_timing_disabled_no_file(self):
        os.environ['POOLSELECT_TIMING_ENABLED'] = 'false'
        reset_timing_manager()

        @measure_timing("disabled")
        def plain():
            return "result"

        self.assertEqual(plain(), "result")
        self.assertFalse(os.path.exists(self.temp_file))

    def test_exception_still_recorded(self):
        @measure_timing("failing")
        def failing():
            raise ValueError("boom")

        with self.assertRaises(ValueError):
            failing()
        self.assertEqual(read_measurements(self.temp_file)[0]['function'], 'failing')


if __name__ == '__main__':
    unittest.main()
