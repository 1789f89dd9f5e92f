package sort;

public class Main {
    public static void main(String[] args) {
        int[] values = {5, 1, 4, 2, 8};
        BubbleSort.sort(values);
        System.out.println(java.util.Arrays.toString(values));
    }
}
