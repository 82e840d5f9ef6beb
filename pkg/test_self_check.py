import test_system
from test_system import SystemTester


def passing(self):
    return True


class TestSelfCheckExitCode:
    def test_all_checks_pass(self, monkeypatch):
        for name in ('test_dependencies', 'test_custom_modules', 'test_file_system', 'run_functionality_test'):
            monkeypatch.setattr(SystemTester, name, passing)
        assert test_system.main() == 0

    def test_failed_check(self, monkeypatch):
        for name in ('test_dependencies', 'test_custom_modules', 'run_functionality_test'):
            monkeypatch.setattr(SystemTester, name, passing)
        monkeypatch.setattr(SystemTester, 'test_file_system', lambda self: False)
        assert test_system.main() == 1

    def test_raising_check(self, monkeypatch):
        for name in ('test_dependencies', 'test_custom_modules', 'test_file_system'):
            monkeypatch.setattr(SystemTester, name, passing)

        def broken(self):
            raise RuntimeError('boom')

        monkeypatch.setattr(SystemTester, 'run_functionality_test', broken)
        assert test_system.main() == 1

    def test_violated_bounds(self, monkeypatch):
        import modules.bounds as bounds

        original = bounds.check_tkur

        def violated(*args, **kwargs):
            report = original(*args, **kwargs)
            report.satisfied = False
            return report

        monkeypatch.setattr(bounds, 'check_tkur', violated)
        tester = SystemTester()
        assert tester.run_functionality_test() is False
        assert tester.test_results['bounds'] == "失敗"
