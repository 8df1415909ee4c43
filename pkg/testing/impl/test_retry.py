from guimigrate.impl.retry import RetryPolicy


def test_backoff_without_jitter():
    r = RetryPolicy(5, base_delay=1, max_delay=6, jitter_ratio=0)
    assert [r.next_delay() for _ in range(4)] == [1, 2, 4, 6]
    assert r.retry_count == 4

def test_retry_budget():
    r = RetryPolicy(2, jitter_ratio=0)
    assert r.can_retry()
    r.next_delay()
    assert r.can_retry()
    r.next_delay()
    assert not r.can_retry()

def test_no_retries_allowed():
    assert not RetryPolicy(0).can_retry()

def test_jitter_stays_within_ratio():
    r = RetryPolicy(10, base_delay=1, max_delay=60, jitter_ratio=0.5, rand_seed=1000)
    for n in range(6):
        d = r.next_delay()
        full = min(2 ** n, 60)
        assert full * 0.5 <= d <= full

def test_same_seed_gives_same_delays():
    a = RetryPolicy(5, rand_seed=42)
    b = RetryPolicy(5, rand_seed=42)
    assert [a.next_delay() for _ in range(5)] == [b.next_delay() for _ in range(5)]
